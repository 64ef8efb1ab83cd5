//! Acceptance criteria. Run with `cargo test --test acceptance`; each
//! criterion prints one `PASS` or `FAIL` line with the measured values.
//!
//! Criteria listed in `KNOWN_RED` are reproduced faithfully and are expected
//! to miss their published targets; they print `FAIL` without failing the
//! run. Any other failure, or a known-red criterion that starts passing,
//! makes the target exit non-zero.

use std::io::Write as _;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use regime_split::calibration::{
    formula_threshold, mc_calibrate, CalibrationResult, Pipeline, FORMULA_NOTE,
};
use regime_split::generators::{rng_for, GeneratorKind};
use regime_split::harness::{preset, run_plan, ExperimentCell, ExperimentTable};
use regime_split::split::{
    partition_by_band, psi, psi_rearranged, sample_mean, scan, scan_breakpoints,
};
use regime_split::theory::{
    info_bound_j, optimal_band, phi0_of, theoretical_psi, type1_bound, type2_bound,
    CramerConstants, Gaussian, MixingProfile,
};
use regime_split::{Sample, ScanGrid, Variant};

const KNOWN_RED: &[u32] = &[4, 5, 6];

type ArgsFor<'a> = Box<dyn Fn(&Path, &str) -> Vec<String> + 'a>;
type Criterion<'a> = Box<dyn Fn() -> Outcome + 'a>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn timed(budget: Duration, started: Instant) -> (bool, String) {
    let t = started.elapsed();
    (
        t < budget,
        format!("{:.1}s of {}s", t.as_secs_f64(), budget.as_secs()),
    )
}

fn table(name: &str) -> ExperimentTable {
    run_plan(&preset(name).expect("preset"), None).expect("plan runs")
}

fn cell<'a>(t: &'a ExperimentTable, label: &str, n: usize) -> &'a ExperimentCell {
    t.cell(label, n)
        .unwrap_or_else(|| panic!("{} has no cell {label} N={n}", t.name))
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_regime-split"))
}

fn cli(args: &[&str]) -> std::process::Output {
    bin().args(args).output().expect("binary runs")
}

fn legendre_rule(n: usize) -> Vec<(f64, f64)> {
    (1..=n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
            loop {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    return (x, 2.0 / ((1.0 - x * x) * dp * dp));
                }
            }
        })
        .collect()
}

fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let rule = legendre_rule(20);
    let w = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let mid = a + (p as f64 + 0.5) * w;
            0.5 * w
                * rule
                    .iter()
                    .map(|&(x, wt)| wt * f(mid + 0.5 * w * x))
                    .sum::<f64>()
        })
        .sum()
}

fn normal_pdf(x: f64, m: f64, s: f64) -> f64 {
    let z = (x - m) / s;
    (-0.5 * z * z).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let mut rng = rng_for(1, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let n = rng.random_range(2..=12);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let s = Sample::new(x).unwrap();
        let center = sample_mean(&s);
        let b = rng.random_range(0.0..12.0);
        let p = partition_by_band(&s, center, b);
        let (a, r) = (psi(&s, &p), psi_rearranged(&s, &p));
        let scale = s.values().iter().map(|v| v.abs()).fold(0.0, f64::max);
        worst = worst.max((a - r).abs() / a.abs().max(scale * 1e-3));
    }
    // a dense grid with step `STEP` reaches every partition whose distinct
    // distances are more than `2 STEP` apart; closer samples are skipped
    const STEP: f64 = 1e-4;
    let (mut compared, mut mismatches) = (0, 0);
    for _ in 0..2_000 {
        let n = rng.random_range(2..=12);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let s = Sample::new(x).unwrap();
        let center = sample_mean(&s);
        let mut keys: Vec<f64> = s.values().iter().map(|v| (v - center).abs()).collect();
        keys.sort_by(f64::total_cmp);
        if keys[0] < 2.0 * STEP || keys.windows(2).any(|w| w[1] - w[0] < 2.0 * STEP) {
            continue;
        }
        compared += 1;
        let exact = scan_breakpoints(&s, center, None);
        let top = keys[keys.len() - 1] + 0.01;
        let grid: Vec<f64> = (1..=(top / STEP).ceil() as usize)
            .map(|i| i as f64 * STEP)
            .collect();
        let dense = scan(&s, center, &grid).unwrap();
        if (dense.j - exact.j).abs() > 1e-12 * (1.0 + exact.j) {
            mismatches += 1;
        }
    }
    let (fast, t) = timed(Duration::from_secs(10), started);
    outcome(
        worst <= 1e-12 && mismatches == 0 && compared >= 1_000 && fast,
        format!(
            "max relative gap {worst:.2e} over 10000 pairs; breakpoint vs dense mismatches \
             {mismatches}/{compared} separable samples; {t}"
        ),
    )
}

fn criterion_2() -> Outcome {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for (n, target) in [(100, 0.1213), (500, 0.0534), (1000, 0.0380)] {
        let spec = dir.path().join(format!("null{n}.txt"));
        std::fs::write(
            &spec,
            format!("[generator]\nkind = shift_mixture\nn = {n}\n"),
        )
        .unwrap();
        let out = dir.path().join(format!("c{n}.json"));
        let o = cli(&[
            "calibrate",
            "--model",
            spec.to_str().unwrap(),
            "--alpha",
            "0.95",
            "--trials",
            "5000",
            "--seed",
            "2024",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let r: CalibrationResult =
            serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
        let rel = r.c / target - 1.0;
        ok &= rel.abs() <= 0.15;
        parts.push(format!("N={n} C={:.4} ({:+.1}%)", r.c, 100.0 * rel));
    }
    let (fast, t) = timed(Duration::from_secs(120), started);
    outcome(ok && fast, format!("{}; {t}", parts.join(", ")))
}

fn criterion_3(t2: &ExperimentTable, elapsed: Duration) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (n, w2, eps) in [(300, 0.26, 0.104), (1000, 0.02, 0.099)] {
        let c = cell(t2, "h=2", n);
        let (w, e) = (c.w2.unwrap(), c.mean_epsilon_hat.unwrap_or(f64::NAN));
        ok &= within(w, w2, 0.05) && within(e, eps, 0.015);
        parts.push(format!(
            "N={n} w2={w:.3} (target {w2}) eps={e:.4} (target {eps})"
        ));
    }
    let fast = elapsed < Duration::from_secs(180);
    outcome(
        ok && fast,
        format!("{}; {:.1}s", parts.join(", "), elapsed.as_secs_f64()),
    )
}

fn criterion_4() -> Outcome {
    let started = Instant::now();
    let pipeline = Pipeline::Univariate {
        variant: Variant::VarianceContamination,
        grid: ScanGrid::default(),
    };
    let c = mc_calibrate(
        &GeneratorKind::standard_normal(),
        &pipeline,
        1000,
        0.95,
        5000,
        2024,
    )
    .unwrap()
    .c;
    let c_ok = (c / 0.1244 - 1.0).abs() <= 0.15;
    let t4 = table("table4");
    let t5 = table("table5");
    let a = cell(&t4, "lambda=3", 1000);
    let b = cell(&t5, "lambda=5", 3000);
    let (aw, ae) = (a.w2.unwrap(), a.mean_epsilon_hat.unwrap_or(f64::NAN));
    let (bw, be) = (b.w2.unwrap(), b.mean_epsilon_hat.unwrap_or(f64::NAN));
    let l3 = within(aw, 0.04, 0.04) && within(ae, 0.05, 0.01);
    let l5 = within(bw, 0.04, 0.04) && within(be, 0.010, 0.004);
    let (fast, t) = timed(Duration::from_secs(300), started);
    outcome(
        c_ok && l3 && l5 && fast,
        format!(
            "C(1000)={c:.4} ({:+.1}%); lambda=3: w2={aw:.3} eps={ae:.4}; lambda=5: w2={bw:.3} eps={be:.4}; {t}",
            100.0 * (c / 0.1244 - 1.0)
        ),
    )
}

fn criterion_5() -> Outcome {
    let started = Instant::now();
    let t = table("table6");
    let mut ok = true;
    let mut parts = Vec::new();
    for (n, target) in [(300, 0.070), (1000, 0.016)] {
        let e = cell(&t, "three-class", n).k_error_rate.unwrap();
        ok &= within(e, target, 0.04);
        parts.push(format!("N={n} P(k wrong)={e:.3} (target {target})"));
    }
    let (fast, tm) = timed(Duration::from_secs(180), started);
    outcome(ok && fast, format!("{}; {tm}", parts.join(", ")))
}

fn criterion_6() -> Outcome {
    let started = Instant::now();
    let t = table("table7");
    let mut ok = true;
    let mut parts = Vec::new();
    for (n, target) in [(700, 0.049), (1500, 0.004)] {
        let e = cell(&t, "three-class-2d", n).k_error_rate.unwrap();
        ok &= within(e, target, 0.05);
        parts.push(format!("N={n} P(k wrong)={e:.3} (target {target})"));
    }
    let small = cell(&t, "three-class-2d", 100).k_error_rate.unwrap();
    ok &= small >= 0.9;
    parts.push(format!("N=100 P(k wrong)={small:.3} (needs >= 0.9)"));
    let (fast, tm) = timed(Duration::from_secs(240), started);
    outcome(ok && fast, format!("{}; {tm}", parts.join(", ")))
}

fn nonincreasing(cells: &[&ExperimentCell]) -> bool {
    cells.windows(2).all(|w| {
        let slack = 2.0 * (w[0].w2_se.unwrap().powi(2) + w[1].w2_se.unwrap().powi(2)).sqrt();
        w[1].w2.unwrap() <= w[0].w2.unwrap() + slack
    })
}

fn criterion_7() -> Outcome {
    let started = Instant::now();
    let mut strict = true;
    let mut relaxed = true;
    let mut parts = Vec::new();
    for (name, label, eps) in [("table8", "eps=0.05", 0.05), ("table9", "eps=0.1", 0.10)] {
        let t = table(name);
        let cells: Vec<&ExperimentCell> = t.cells.iter().filter(|c| c.label == label).collect();
        let last = cell(&t, label, 1000);
        let (w, e) = (last.w2.unwrap(), last.mean_epsilon_hat.unwrap_or(f64::NAN));
        strict &= w <= 0.05 && within(e, eps, 0.015);
        relaxed &= nonincreasing(&cells) && within(e, eps, 0.03);
        let trail: Vec<String> = cells
            .iter()
            .map(|c| format!("{:.3}", c.w2.unwrap()))
            .collect();
        parts.push(format!(
            "{label}: w2 by N [{}], eps(1000)={e:.4}",
            trail.join(" ")
        ));
    }
    let (fast, tm) = timed(Duration::from_secs(240), started);
    let level = match (strict, relaxed) {
        (true, _) => "strict",
        (false, true) => "relaxed fallback",
        _ => "neither form",
    };
    outcome(
        (strict || relaxed) && fast,
        format!("{level}; {}; {tm}", parts.join("; ")),
    )
}

fn criterion_8(t2: &ExperimentTable) -> Outcome {
    let cc = CramerConstants::gaussian(1.0);
    let independent = MixingProfile::independent();
    let mut checked = 0;
    let mut violations = Vec::new();

    let null = table("table1");
    let mut nulls = Vec::new();
    for (n, c) in [(100, 0.1213), (300, 0.0710), (1000, 0.0380)] {
        let mut plan = preset("table2").unwrap();
        plan.name = "null".into();
        plan.rows.truncate(1);
        plan.rows[0].n = n;
        plan.rows[0].generator = GeneratorKind::standard_normal();
        plan.rows[0].threshold = regime_split::ThresholdSpec::Fixed { c };
        let cell = run_plan(&plan, None).unwrap().cells.remove(0);
        nulls.push((n, c, cell.type1_rate.unwrap()));
    }
    // The table1 quantiles are the observed type-1 boundary: at C = q_alpha the
    // rejection rate is about 1 - alpha
    for c in null.cells.iter().filter(|c| c.quantile.is_some()) {
        let q = c.quantile.unwrap();
        let alpha = if c.label.contains("0.99") { 0.99 } else { 0.95 };
        nulls.push((c.n, q, 1.0 - alpha));
    }
    for (n, c, rate) in nulls {
        let phi0 = phi0_of(c, &independent, cc).unwrap();
        let bound = type1_bound(c, phi0, cc, n).min(1.0);
        checked += 1;
        if rate > bound {
            violations.push(format!("type 1 N={n} C={c}: {rate} > {bound}"));
        }
    }
    let f0 = Gaussian::standard();
    let mut min_bound = f64::INFINITY;
    for cell in &t2.cells {
        let (eps, h) = (0.1, if cell.label == "h=2" { 2.0 } else { 1.5 });
        let b = optimal_band(eps, h, &f0, None).unwrap();
        let peak = theoretical_psi(b, eps, h, &f0).unwrap().abs();
        let c = cell.c.unwrap();
        let delta = peak - c;
        let bound = if delta > 0.0 {
            let phi0 = phi0_of(delta, &independent, cc).unwrap();
            type2_bound(delta, phi0, cc, cell.n).min(1.0)
        } else {
            1.0
        };
        min_bound = min_bound.min(bound);
        checked += 1;
        if cell.w2.unwrap() > bound {
            violations.push(format!(
                "type 2 {} N={}: {} > {bound}",
                cell.label,
                cell.n,
                cell.w2.unwrap()
            ));
        }
    }
    outcome(
        violations.is_empty(),
        format!(
            "{checked} cells checked, {} violations; smallest type-2 bound {min_bound:.3} {}",
            violations.len(),
            violations.join("; ")
        ),
    )
}

fn criterion_9() -> Outcome {
    let f0 = Gaussian::standard();
    let mut worst: f64 = 0.0;
    for eps in [0.05, 0.1, 0.2] {
        for h in [1.5, 2.0, 3.0] {
            let root = optimal_band(eps, h, &f0, None).unwrap();
            let size = |b: f64| theoretical_psi(b, eps, h, &f0).unwrap().abs();
            let step = 2e-3;
            let coarse = (1..=4000)
                .map(|i| i as f64 * step)
                .max_by(|a, b| size(*a).total_cmp(&size(*b)))
                .unwrap();
            let (mut lo, mut hi) = (coarse - step, coarse + step);
            let g = 0.5 * (5f64.sqrt() - 1.0);
            while hi - lo > 1e-9 {
                let (x1, x2) = (hi - g * (hi - lo), lo + g * (hi - lo));
                if size(x1) < size(x2) {
                    lo = x1;
                } else {
                    hi = x2;
                }
            }
            worst = worst.max((root - 0.5 * (lo + hi)).abs());
        }
    }
    let (eps, h) = (0.1, 2.0);
    let b_star = optimal_band(eps, h, &f0, None).unwrap();
    let generator = GeneratorKind::ShiftMixture {
        epsilon: eps,
        h,
        sigma: 1.0,
    };
    let mean_b: f64 = (0..100u64)
        .map(|seed| {
            let g = generator
                .sample_with(10_000, &mut rng_for(seed, 0))
                .unwrap();
            let regime_split::generators::Dataset::Univariate(s) = g.data else {
                unreachable!()
            };
            scan_breakpoints(&s, sample_mean(&s), None).b_star
        })
        .sum::<f64>()
        / 100.0;
    outcome(
        worst < 1e-4 && (mean_b - b_star).abs() <= 0.2,
        format!(
            "root vs dense argmax max gap {worst:.2e}; b*={b_star:.4}, mean sample b*={mean_b:.4}"
        ),
    )
}

fn criterion_10() -> Outcome {
    let f = Gaussian::new(0.2, 1.1).unwrap();
    let zero = info_bound_j(0.3, &f, &f).unwrap();
    let mut rng = rng_for(10, 0);
    let mut negative = 0;
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let (m0, s0) = (rng.random_range(-2.0..2.0), rng.random_range(0.5..1.5));
        let (m1, s1) = (rng.random_range(-2.0..2.0), rng.random_range(0.5..1.5));
        let eps = rng.random_range(0.05..0.95);
        let j = info_bound_j(
            eps,
            &Gaussian::new(m0, s0).unwrap(),
            &Gaussian::new(m1, s1).unwrap(),
        )
        .unwrap();
        if j < 0.0 {
            negative += 1;
        }
        if i < 20 {
            let lo = (m0 - 12.0 * s0).min(m1 - 12.0 * s1);
            let hi = (m0 + 12.0 * s0).max(m1 + 12.0 * s1);
            let oracle = gauss_legendre(
                |x| {
                    let (a, b) = (normal_pdf(x, m0, s0), normal_pdf(x, m1, s1));
                    let mix = (1.0 - eps) * a + eps * b;
                    if mix > 0.0 {
                        (a - b).powi(2) / mix
                    } else {
                        0.0
                    }
                },
                lo,
                hi,
                400,
            );
            worst = worst.max((j - oracle).abs() / oracle.max(1.0));
        }
    }
    outcome(
        zero == 0.0 && negative == 0 && worst <= 1e-8,
        format!("J(f,f)={zero}; negative J on {negative}/100 pairs; max gap to fixed-order rule {worst:.2e}"),
    )
}

fn criterion_11() -> Outcome {
    let c = formula_threshold(1000, 1.0, 0.0, 0.95).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("null.txt");
    std::fs::write(&spec, "[generator]\nkind = shift_mixture\nn = 1000\n").unwrap();
    let out = dir.path().join("c.json");
    let o = cli(&[
        "calibrate",
        "--model",
        spec.to_str().unwrap(),
        "--trials",
        "200",
        "--seed",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let r: CalibrationResult =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let in_mc = r.notes.iter().any(|n| n == FORMULA_NOTE);
    let in_formula = CalibrationResult::from_formula(1000, 1.0, 0.0, 0.95)
        .unwrap()
        .notes
        .iter()
        .any(|n| n == FORMULA_NOTE);
    outcome(
        within(c, 0.03165, 1e-4) && in_mc && in_formula,
        format!("C={c:.5}; discrepancy note in calibrate output: {in_mc}, in formula result: {in_formula}"),
    )
}

fn run_twice(
    label: &str,
    make: impl Fn(&Path, &str) -> Vec<String>,
    out_names: &[&str],
) -> Result<(), String> {
    let dir = tempfile::tempdir().unwrap();
    let mut seen: Vec<Vec<Vec<u8>>> = Vec::new();
    for (k, workers) in ["1", "4"].iter().enumerate() {
        let sub = dir.path().join(format!("run{k}"));
        std::fs::create_dir(&sub).unwrap();
        let args = make(&sub, workers);
        let o = bin()
            .args(&args)
            .env("REGIME_SPLIT_THREADS", workers)
            .output()
            .unwrap();
        if !o.status.success() {
            return Err(format!("{label}: {}", String::from_utf8_lossy(&o.stderr)));
        }
        seen.push(
            out_names
                .iter()
                .map(|n| std::fs::read(sub.join(n)).unwrap())
                .collect(),
        );
    }
    if seen[0] != seen[1] {
        return Err(format!("{label}: outputs differ"));
    }
    Ok(())
}

fn criterion_12() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.txt");
    std::fs::write(
        &spec,
        "[generator]\nkind = multiclass\nn = 500\nepsilons = 0.3, 0.15\nshifts = 1, 3, 7\n",
    )
    .unwrap();
    let null = dir.path().join("null.txt");
    std::fs::write(&null, "[generator]\nkind = shift_mixture\nn = 500\n").unwrap();
    let spec = spec.to_str().unwrap().to_string();
    let null = null.to_str().unwrap().to_string();
    let p = |d: &Path, f: &str| d.join(f).to_str().unwrap().to_string();
    let mut failures = Vec::new();
    let checks: Vec<(&str, ArgsFor, Vec<&str>)> = vec![
        (
            "simulate",
            Box::new(|d: &Path, _w: &str| {
                vec![
                    "simulate".into(),
                    "--spec".into(),
                    spec.clone(),
                    "--out".into(),
                    p(d, "d.csv"),
                    "--labels".into(),
                    p(d, "l.csv"),
                    "--seed".into(),
                    "7".into(),
                ]
            }),
            vec!["d.csv", "l.csv"],
        ),
        (
            "calibrate",
            Box::new(|d: &Path, w: &str| {
                vec![
                    "calibrate".into(),
                    "--model".into(),
                    null.clone(),
                    "--trials".into(),
                    "500".into(),
                    "--seed".into(),
                    "7".into(),
                    "--out".into(),
                    p(d, "c.json"),
                    "--workers".into(),
                    w.into(),
                ]
            }),
            vec!["c.json"],
        ),
        (
            "experiment",
            Box::new(|d: &Path, _w: &str| {
                vec![
                    "experiment".into(),
                    "--preset".into(),
                    "table6".into(),
                    "--replications".into(),
                    "50".into(),
                    "--out".into(),
                    p(d, "t.csv"),
                    "--json".into(),
                    p(d, "t.json"),
                ]
            }),
            vec!["t.csv", "t.json"],
        ),
    ];
    for (label, make, outs) in &checks {
        if let Err(e) = run_twice(label, make, outs) {
            failures.push(e);
        }
    }
    let data = dir.path().join("shared.csv");
    let o = cli(&[
        "simulate",
        "--spec",
        &spec,
        "--out",
        data.to_str().unwrap(),
        "--seed",
        "3",
    ]);
    assert!(o.status.success());
    let data = data.to_str().unwrap().to_string();
    let detect = run_twice(
        "detect",
        |d: &Path, _w: &str| {
            vec![
                "detect".into(),
                "--data".into(),
                data.clone(),
                "--mode".into(),
                "multiclass".into(),
                "--threshold".into(),
                "formula:1,0,0.95".into(),
                "--b-max".into(),
                "2".into(),
                "--out".into(),
                p(d, "r.json"),
            ]
        },
        &["r.json"],
    );
    if let Err(e) = detect {
        failures.push(e);
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            "simulate, calibrate, detect and experiment byte-identical at 1 and 4 workers"
                .to_string()
        } else {
            failures.join("; ")
        },
    )
}

fn main() {
    let started = Instant::now();
    let t2_started = Instant::now();
    let t2 = table("table2");
    let t2_elapsed = t2_started.elapsed();
    let criteria: Vec<(u32, &str, Criterion)> = vec![
        (
            1,
            "split statistic oracle equivalence",
            Box::new(criterion_1),
        ),
        (2, "table1 Monte Carlo thresholds", Box::new(criterion_2)),
        (
            3,
            "table2 binary shift mixture",
            Box::new(|| criterion_3(&t2, t2_elapsed)),
        ),
        (
            4,
            "table3-5 variance contamination",
            Box::new(criterion_4),
        ),
        (5, "table6 univariate three classes", Box::new(criterion_5)),
        (
            6,
            "table7 multivariate three classes",
            Box::new(criterion_6),
        ),
        (7, "table8-9 switching regression", Box::new(criterion_7)),
        (
            8,
            "error bounds never violated",
            Box::new(|| criterion_8(&t2)),
        ),
        (9, "optimal band and sample b*", Box::new(criterion_9)),
        (10, "information bound J", Box::new(criterion_10)),
        (
            11,
            "threshold formula value and note",
            Box::new(criterion_11),
        ),
        (
            12,
            "determinism across reruns and workers",
            Box::new(criterion_12),
        ),
    ];
    let mut unexpected = Vec::new();
    let stdout = std::io::stdout();
    for (id, name, run) in &criteria {
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        let known = KNOWN_RED.contains(id);
        let note = if known && !o.pass { " [known red]" } else { "" };
        writeln!(
            stdout.lock(),
            "{tag} criterion {id:>2} ({name}){note}: {}",
            o.detail
        )
        .unwrap();
        if o.pass == known {
            unexpected.push(*id);
        }
    }
    let mut out = stdout.lock();
    writeln!(
        out,
        "acceptance finished in {:.1}s",
        started.elapsed().as_secs_f64()
    )
    .unwrap();
    if !unexpected.is_empty() {
        writeln!(out, "unexpected outcome for criteria {unexpected:?}").unwrap();
        std::process::exit(1);
    }
}
