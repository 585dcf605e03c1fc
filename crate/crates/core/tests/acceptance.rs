//! Acceptance criteria 1 to 12. Each test prints one `criterion N: PASS|FAIL`
//! line straight to stdout, so the lines show up even when libtest captures
//! output.

use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use doleans::generators::{generate_member, time_changed_walk_path, walk_path, GeneratorKind, GeneratorSpec, JumpLaw, QvChannel};
use doleans::harness::{run_suite, SuiteConfig, SuiteKind, SuiteReport, Verdict};
use doleans::{sign_change_count, stoch_exp_formula, stoch_exp_recursive, CadlagPath, Mode};

const MASTER: u64 = 20_240_917;

fn emit(criterion: &str, ok: bool, detail: &str) {
    let line = format!("criterion {criterion}: {} {detail}\n", if ok { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn suite(kind: SuiteKind, spec: GeneratorSpec, n_paths: usize) -> SuiteConfig {
    SuiteConfig::new(kind, spec, n_paths, MASTER)
}

fn run(config: &SuiteConfig) -> SuiteReport {
    run_suite(config, None).expect("valid suite config")
}

fn failing(report: &SuiteReport) -> Vec<String> {
    report
        .checks
        .iter()
        .filter(|c| c.verdict == Verdict::Fail)
        .map(|c| format!("{}/{}", report.suite.name(), c.name))
        .collect()
}

fn worst_error(report: &SuiteReport) -> f64 {
    report.checks.iter().filter_map(|c| c.max_error).fold(0.0, f64::max)
}

#[test]
fn criterion_01_pure_jump_roundtrips() {
    let spec = GeneratorSpec::new(GeneratorKind::RandomL { kill_probability: 0.05 }, 1.0, 50);
    let (report, elapsed) = timed(|| run(&suite(SuiteKind::Roundtrip, spec, 10_000)));
    let worst = worst_error(&report);
    let ok = report.passed() && worst <= 1e-12 && report.checks.len() == 4 && elapsed.as_secs_f64() <= 5.0;
    emit("1", ok, &format!("max channel error {worst:.3e} over 10000 paths in {:.2}s", elapsed.as_secs_f64()));
    assert!(report.passed(), "{:?}", failing(&report));
    assert!(elapsed.as_secs_f64() <= 5.0, "took {elapsed:?}");
}

#[test]
fn criterion_02_grid_roundtrip() {
    let spec = GeneratorSpec::new(GeneratorKind::Brownian, 1.0, 1000);
    let (report, elapsed) = timed(|| run(&suite(SuiteKind::Roundtrip, spec, 1000)));
    let worst = worst_error(&report);
    let ok = report.passed() && worst <= 1e-10 && elapsed.as_secs_f64() <= 10.0;
    emit("2", ok, &format!("max channel error {worst:.3e} over 1000 paths in {:.2}s", elapsed.as_secs_f64()));
    assert!(report.passed(), "{:?}", failing(&report));
    assert!(elapsed.as_secs_f64() <= 10.0, "took {elapsed:?}");
}

/// Every generator kind, in each mode it supports.
fn all_kinds() -> Vec<GeneratorSpec> {
    let laws = [
        JumpLaw::Uniform { low: -0.9, high: 2.0 },
        JumpLaw::Uniform { low: -3.0, high: -1.5 },
        JumpLaw::TwoPoint { a: -1.0, b: 0.5, p_a: 0.1 },
        JumpLaw::ShiftedExponential { shift: -0.95, rate: 2.0 },
    ];
    let mut pure = vec![
        GeneratorSpec::new(GeneratorKind::Walk { stopped: true }, 20.0, 1),
        GeneratorSpec::new(GeneratorKind::Walk { stopped: false }, 20.0, 1),
        GeneratorSpec::new(GeneratorKind::TimeChangedWalk { n_max: 200 }, 1.0, 1),
        GeneratorSpec::new(GeneratorKind::RandomL { kill_probability: 0.05 }, 1.0, 50),
    ];
    pure.extend(laws.map(|law| GeneratorSpec::new(GeneratorKind::CompoundPoisson { rate: 20.0, law }, 1.0, 1)));
    let mut specs = vec![
        GeneratorSpec::new(GeneratorKind::Brownian, 1.0, 1000),
        GeneratorSpec::new(GeneratorKind::Brownian, 1.0, 1000).with_qv(QvChannel::Realized),
        GeneratorSpec::new(GeneratorKind::StoppedBrownian, 10.0, 1000),
        GeneratorSpec::new(GeneratorKind::OneJump, 2.0, 1000),
    ];
    for s in pure {
        specs.push(s);
        specs.push(s.with_mode(Mode::GridApprox));
    }
    specs
}

fn reciprocal_reports() -> &'static (Vec<SuiteReport>, Duration) {
    static REPORTS: OnceLock<(Vec<SuiteReport>, Duration)> = OnceLock::new();
    REPORTS.get_or_init(|| {
        timed(|| all_kinds().into_iter().map(|spec| run(&suite(SuiteKind::Reciprocal, spec, 1000))).collect())
    })
}

#[test]
fn criterion_03_reciprocal_identity() {
    let (reports, elapsed) = reciprocal_reports();
    let mut worst = 0.0_f64;
    let mut bad = Vec::new();
    for r in reports {
        let c = r.check("product-equals-one").unwrap();
        worst = worst.max(c.max_error.unwrap());
        if c.verdict == Verdict::Fail {
            bad.push(format!("{} {:?}", r.config.spec.kind.name(), r.config.spec.mode));
        }
    }
    let ok = bad.is_empty() && elapsed.as_secs_f64() <= 10.0;
    emit(
        "3",
        ok,
        &format!("sup |E(X)E(Y) - 1| = {worst:.3e} over {} ensembles of 1000 paths in {:.2}s", reports.len(), elapsed.as_secs_f64()),
    );
    assert!(bad.is_empty(), "{bad:?}");
    assert!(elapsed.as_secs_f64() <= 10.0, "took {elapsed:?}");
}

#[test]
fn criterion_04_jump_transport() {
    let (reports, _) = reciprocal_reports();
    let mut worst = 0.0_f64;
    let mut bad = Vec::new();
    for r in reports {
        for c in r.checks.iter().filter(|c| c.name.starts_with("transport")) {
            worst = worst.max(c.max_error.unwrap());
            if c.verdict == Verdict::Fail {
                bad.push(format!("{} {:?} {}", r.config.spec.kind.name(), r.config.spec.mode, c.name));
            }
        }
    }
    emit("4", bad.is_empty(), &format!("largest relative gap {worst:.3e} for G in {{y^2, y - log|1+y|, 1{{|y|>1/2}}}}"));
    assert!(bad.is_empty(), "{bad:?}");
}

#[test]
fn criterion_05_closed_forms() {
    let mut worst = [0.0_f64; 4];

    let bm = GeneratorSpec::new(GeneratorKind::Brownian, 1.0, 1000);
    for i in 0..200 {
        let x = generate_member(&bm, MASTER, i).unwrap();
        let z = stoch_exp_formula(&x);
        for k in 0..=x.steps() {
            let oracle = (x.values()[k] - x.time_at(k) / 2.0).exp();
            worst[0] = worst[0].max((z.values()[k] - oracle).abs());
        }
    }

    let one_jump = GeneratorSpec::new(GeneratorKind::OneJump, 2.0, 1000);
    for i in 0..200 {
        let x = generate_member(&one_jump, MASTER, i).unwrap();
        let z = stoch_exp_formula(&x);
        let jump = x.jumps().iter().position(|&j| j == -1.0).map_or(usize::MAX, |k| k + 1);
        for k in 0..=x.steps() {
            let err = if k < jump { (z.values()[k] - x.time_at(k).exp()).abs() } else { z.values()[k].abs() };
            worst[1] = worst[1].max(if k >= jump && err != 0.0 { f64::INFINITY } else { err });
        }
    }

    let walk = GeneratorSpec::new(GeneratorKind::Walk { stopped: false }, 30.0, 1);
    for i in 0..200 {
        let x = generate_member(&walk, MASTER, i).unwrap();
        let z = stoch_exp_recursive(&x);
        let rho = x.jumps().iter().position(|&j| j == -1.0).map_or(usize::MAX, |k| k + 1);
        for k in 0..=x.steps() {
            let oracle = if k < rho { 2f64.powi(k as i32) } else { 0.0 };
            if z.values()[k] != oracle {
                worst[2] = f64::INFINITY;
            }
        }
        assert_eq!(walk_path(x.jumps(), false), x);
    }

    let tcw = GeneratorSpec::new(GeneratorKind::TimeChangedWalk { n_max: 200 }, 1.0, 1);
    for i in 0..200 {
        let x = generate_member(&tcw, MASTER, i).unwrap();
        assert_eq!(time_changed_walk_path(x.jumps()), x);
        let recursive = stoch_exp_recursive(&x);
        let formula = stoch_exp_formula(&x);
        let mut product = 1.0;
        for k in 0..=x.steps() {
            if k > 0 {
                product *= 1.0 + x.jumps()[k - 1];
            }
            if recursive.values()[k] != product {
                worst[3] = f64::INFINITY;
            }
            worst[3] = worst[3].max((formula.values()[k] - product).abs() / product);
        }
    }

    let ok = worst[0] <= 1e-12 && worst[1] <= 1e-12 && worst[2] == 0.0 && worst[3] <= 1e-12;
    emit(
        "5",
        ok,
        &format!(
            "gbm {:.2e}, one-jump {:.2e}, walk exact={}, time-changed walk exact product with formula rel. {:.2e}",
            worst[0],
            worst[1],
            worst[2] == 0.0,
            worst[3]
        ),
    );
    assert!(ok, "{worst:?}");
}

#[test]
fn criterion_06_time_changed_walk_statistics() {
    let spec = GeneratorSpec::new(GeneratorKind::TimeChangedWalk { n_max: 200 }, 1.0, 1);
    let (report, elapsed) = timed(|| run(&suite(SuiteKind::Convergence, spec, 10_000)));
    let lln = report.check("law-of-large-numbers").unwrap();
    let small = report.check("terminal-below-zero-level").unwrap();
    let ci = lln.interval.unwrap();
    let ok = lln.verdict == Verdict::Pass && small.verdict == Verdict::Pass && elapsed.as_secs_f64() <= 10.0;
    emit(
        "6",
        ok,
        &format!(
            "LLN {:.5} +- {:.5} (target {:.5}), fraction below 1e-3 {:.4}, {:.2}s",
            ci.estimate,
            ci.multiplier * ci.standard_error,
            ci.target,
            small.metrics["fraction"],
            elapsed.as_secs_f64()
        ),
    );
    assert!(ok);
}

fn stopped_bm_report() -> &'static (SuiteReport, Duration) {
    static REPORT: OnceLock<(SuiteReport, Duration)> = OnceLock::new();
    REPORT.get_or_init(|| {
        let spec = GeneratorSpec::new(GeneratorKind::StoppedBrownian, 100.0, 10_000);
        timed(|| run(&suite(SuiteKind::Maximality, spec, 1000)))
    })
}

#[test]
fn criterion_07a_stopped_brownian_absorption() {
    let (report, elapsed) = stopped_bm_report();
    let absorbed = report.check("absorbed-fraction").unwrap();
    let kinds = report.check("hit-kind-continuous").unwrap();
    let ci = absorbed.interval.unwrap();
    let ok = absorbed.verdict == Verdict::Pass && kinds.verdict == Verdict::Pass && elapsed.as_secs_f64() <= 30.0;
    emit(
        "7a",
        ok,
        &format!(
            "absorbed {:.3} vs {:.3} +- 0.03, continuous hits {}/{}, {:.2}s",
            ci.estimate,
            ci.target,
            kinds.passed,
            kinds.samples,
            elapsed.as_secs_f64()
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_07b_stopped_brownian_maximal_tail() {
    let (report, _) = stopped_bm_report();
    let tail = report.check("maximal-tail").unwrap();
    let m = &tail.metrics;
    emit(
        "7b",
        tail.verdict == Verdict::Pass,
        &format!(
            "maximal fraction {:.3} (need 0.95): diverges {:.3}, infinite-qv {:.3}, indeterminate {:.3}, median L(Z) at hit {:.2}",
            m["fraction"],
            m["fraction-diverges-to-minus-inf"],
            m["fraction-infinite-qv"],
            m["fraction-indeterminate"],
            m["median-final-log-value"]
        ),
    );
    assert_eq!(tail.verdict, Verdict::Pass, "{:?}", tail.metrics);
}

#[test]
fn criterion_08_evaluator_convergence() {
    let spec = GeneratorSpec::new(GeneratorKind::Brownian, 1.0, 64);
    let mut config = suite(SuiteKind::Rate, spec, 200);
    config.meshes = vec![64, 256, 1024];
    let report = run(&config);
    let c = &report.checks[0];
    emit(
        "8",
        report.passed(),
        &format!(
            "median gaps {:.3e} > {:.3e} > {:.3e}, ratios {:.3} {:.3}",
            c.metrics["median-gap-64"],
            c.metrics["median-gap-256"],
            c.metrics["median-gap-1024"],
            c.metrics["ratio-64-256"],
            c.metrics["ratio-256-1024"]
        ),
    );
    assert!(report.passed(), "{:?}", c.metrics);
}

#[test]
fn criterion_09_supermartingale_means() {
    let mut reports = Vec::new();
    let mut one_jump = suite(SuiteKind::Supermartingale, GeneratorSpec::new(GeneratorKind::OneJump, 2.0, 200), 10_000);
    one_jump.checkpoints = vec![0.4, 0.8, 1.2, 1.6, 2.0];
    reports.push(run(&one_jump));
    let mut tcw = suite(
        SuiteKind::Supermartingale,
        GeneratorSpec::new(GeneratorKind::TimeChangedWalk { n_max: 11 }, 1.0, 1),
        10_000,
    );
    tcw.checkpoints = [3.0, 5.0, 7.0, 9.0, 11.0].iter().map(|n| 1.0 - 1.0 / n).collect();
    reports.push(run(&tcw));
    let mut bm = suite(SuiteKind::Supermartingale, GeneratorSpec::new(GeneratorKind::StoppedBrownian, 1.0, 1000), 10_000);
    bm.checkpoints = vec![0.2, 0.4, 0.6, 0.8, 1.0];
    reports.push(run(&bm));

    let bad: Vec<String> = reports.iter().flat_map(failing).collect();
    let worst_z = reports
        .iter()
        .flat_map(|r| r.checks.iter().filter(|c| c.name.starts_with("mean-equals-one")))
        .map(|c| {
            let ci = c.interval.unwrap();
            (ci.estimate - 1.0).abs() / ci.standard_error
        })
        .fold(0.0, f64::max);
    emit("9", bad.is_empty(), &format!("15 checkpoint means, largest |mean - 1| = {worst_z:.2} SE"));
    assert!(bad.is_empty(), "{bad:?}");
}

#[test]
fn criterion_10_announcing_sequence() {
    let spec = GeneratorSpec::new(GeneratorKind::TimeChangedWalk { n_max: 200 }, 1.0, 1);
    let report = run(&suite(SuiteKind::Announcing, spec, 1000));
    let below = report.check("sigma-below-tau").unwrap();
    emit(
        "10",
        report.passed(),
        &format!(
            "{} paths, hit fraction {:.3}, checks {:?}",
            below.samples,
            below.metrics["hit-fraction"],
            report.checks.iter().map(|c| (c.name.as_str(), c.passed)).collect::<Vec<_>>()
        ),
    );
    assert!(report.passed(), "{:?}", failing(&report));
}

#[test]
fn criterion_11_sign_rule() {
    let x = CadlagPath::pure_jump(0.0, vec![1.0, 2.0, 3.0], vec![0.0, -2.0, 0.0]).unwrap();
    let z = stoch_exp_formula(&x);
    let mut ok = z.values() == [1.0, 1.0, -1.0, -1.0];

    let law = JumpLaw::Uniform { low: -3.0, high: -1.5 };
    let mixed = JumpLaw::TwoPoint { a: -2.5, b: 0.7, p_a: 0.4 };
    let mut checked = 0usize;
    for law in [law, mixed] {
        let spec = GeneratorSpec::new(GeneratorKind::CompoundPoisson { rate: 10.0, law }, 1.0, 1);
        for i in 0..1000 {
            let x = generate_member(&spec, MASTER, i).unwrap();
            let z = stoch_exp_formula(&x);
            for (v, n) in z.values().iter().zip(sign_change_count(&x)) {
                let expected = if n % 2 == 0 { 1.0 } else { -1.0 };
                ok &= v.signum() == expected;
                checked += 1;
            }
        }
    }
    emit("11", ok, &format!("E(X) = -1 after a jump of -2; signs match on {checked} indices"));
    assert!(ok);
}

#[test]
fn criterion_12_determinism() {
    let configs = [
        suite(SuiteKind::Roundtrip, GeneratorSpec::new(GeneratorKind::RandomL { kill_probability: 0.05 }, 1.0, 50), 500),
        suite(SuiteKind::Reciprocal, GeneratorSpec::new(GeneratorKind::Brownian, 1.0, 200), 200),
        suite(SuiteKind::Convergence, GeneratorSpec::new(GeneratorKind::TimeChangedWalk { n_max: 50 }, 1.0, 1), 500),
        suite(SuiteKind::Supermartingale, GeneratorSpec::new(GeneratorKind::OneJump, 2.0, 100), 500),
        suite(SuiteKind::Maximality, GeneratorSpec::new(GeneratorKind::StoppedBrownian, 4.0, 400), 300),
        suite(SuiteKind::Announcing, GeneratorSpec::new(GeneratorKind::TimeChangedWalk { n_max: 100 }, 1.0, 1), 300),
    ];
    let mut ok = true;
    for config in &configs {
        let reference = run_suite(config, None).unwrap().to_json();
        for workers in [1, 3, 8] {
            ok &= run_suite(config, Some(workers)).unwrap().to_json() == reference;
        }
        ok &= run_suite(config, None).unwrap().to_json() == reference;
    }
    emit("12", ok, &format!("{} suites byte-identical at 1, 3, 8 and default workers", configs.len()));
    assert!(ok);
}
