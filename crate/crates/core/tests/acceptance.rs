//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

mod common;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

use proptest::test_runner::{Config, TestCaseError, TestRunner};
use statrs::distribution::{ContinuousCDF, Normal};

use exosolve_core::config::EngineConfig;
use exosolve_core::estimators::{estimate_all, gaussian3_pdf, von_mises_pdf};
use exosolve_core::eval::{
    baseline_vgpn, generate_suite, run_benchmark, write_report, Engine, EpisodeResult, LoadedScenario, Method,
    SuiteConfig, Visibility,
};
use exosolve_core::perception::{simulate_ssl, ssl_gate, SslConfig};
use exosolve_core::query::{DemonstrativeLexicon, QueryLevel};
use exosolve_core::{DemonstrativeModel, PointingModel, Vec3};

type Outcome = Result<String, String>;

/// Name, runtime limit in seconds, check.
type Criterion = (&'static str, Option<u64>, fn() -> Outcome);

fn suite(positions: usize, seed: u64) -> Vec<LoadedScenario> {
    let cfg = SuiteConfig {
        positions,
        seed,
        ..Default::default()
    };
    generate_suite(&cfg)
        .unwrap()
        .load(&DemonstrativeLexicon::default())
        .unwrap()
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

// Power series for the modified Bessel function of order zero.
fn i0_series(k: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 1..200 {
        term *= (k / 2.0) * (k / 2.0) / (m as f64 * m as f64);
        sum += term;
        if term < sum * 1e-18 {
            break;
        }
    }
    sum
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn density() -> Outcome {
    let mut worst: f64 = 0.0;
    for kappa in [0.0, 0.5, 2.0, 8.0] {
        for i in 0..100 {
            let theta = -PI + 2.0 * PI * (i as f64 + 0.5) / 100.0;
            let want = (kappa * theta.cos()).exp() / (2.0 * PI * i0_series(kappa));
            let got = von_mises_pdf(theta, kappa).unwrap();
            worst = worst.max((got - want).abs());
        }
        let total = simpson(|t| von_mises_pdf(t, kappa).unwrap(), -PI, PI, 2000);
        ensure(
            (total - 1.0).abs() <= 1e-6,
            format!("von Mises kappa={kappa} integrates to {total}"),
        )?;
    }
    ensure(worst <= 1e-6, format!("max deviation from series oracle {worst:e}"))?;

    let sigma = 0.5;
    let mu = Vec3::new(0.3, -0.2, 1.1);
    let (n, half) = (120, 5.0 * sigma);
    let h = 2.0 * half / n as f64;
    let w = |i: usize| {
        if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        }
    };
    let mut total = 0.0;
    for i in 0..=n {
        for j in 0..=n {
            for k in 0..=n {
                let x = mu + Vec3::new(-half + i as f64 * h, -half + j as f64 * h, -half + k as f64 * h);
                total += w(i) * w(j) * w(k) * gaussian3_pdf(x, mu, sigma).unwrap();
            }
        }
    }
    total *= (h / 3.0).powi(3);
    ensure(
        (total - 1.0).abs() <= 1e-3,
        format!("gaussian over 10 sigma box integrates to {total}"),
    )?;
    Ok(format!("series max err {worst:.1e}, gaussian mass {total:.6}"))
}

fn hygiene() -> Outcome {
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    let result = runner.run(&proptest::prelude::any::<u64>(), |seed| {
        let s = common::random_scene(seed);
        let est = estimate_all(
            &s.map,
            &s.query,
            &s.obs,
            s.robot,
            &DemonstrativeModel::default(),
            &PointingModel::default(),
            5,
        )
        .map_err(|e| TestCaseError::fail(e.to_string()))?;
        for (name, d) in [
            ("p1", &est.linguistic),
            ("p2", &est.demonstrative),
            ("p3", &est.pointing),
            ("fused", &est.fused.distribution),
        ] {
            let sum: f64 = d.p.iter().sum();
            if d.p.iter().any(|&x| x < 0.0 || !x.is_finite()) || (sum - 1.0).abs() > 1e-9 {
                return Err(TestCaseError::fail(format!("{name} invalid, sum {sum}")));
            }
        }
        let mut best: Option<(f64, &str)> = None;
        for (i, id) in est.linguistic.object_ids.iter().enumerate() {
            let prod = est.linguistic.p[i] * est.demonstrative.p[i] * est.pointing.p[i];
            let better = match best {
                None => true,
                Some((b, bid)) => prod > b || (prod == b && id.as_str() < bid),
            };
            if better {
                best = Some((prod, id));
            }
        }
        let head = &est.fused.head().object_id;
        if head != best.unwrap().1 {
            return Err(TestCaseError::fail(format!(
                "fused head {head} vs brute force {}",
                best.unwrap().1
            )));
        }
        Ok(())
    });
    result.map_err(|e| e.to_string())?;
    Ok("1000 scenes".into())
}

fn ssl() -> Outcome {
    let gate = 29f64.to_radians();
    for truth in [0.0, 3.1, -3.1, PI] {
        for sign in [1.0, -1.0] {
            let pass = ssl_gate(truth, truth + sign * 28f64.to_radians(), gate);
            let fail = ssl_gate(truth, truth + sign * 30f64.to_radians(), gate);
            ensure(pass && !fail, format!("gate wrong around bearing {truth} sign {sign}"))?;
        }
    }
    let cfg = SslConfig::from_degrees(15.0, None, 58.0);
    let hits = (0..10_000u64).filter(|&s| simulate_ssl(1.0, &cfg, s).1).count();
    let rate = hits as f64 / 10_000.0;
    let oracle = 2.0 * Normal::new(0.0, 15.0).unwrap().cdf(29.0) - 1.0;
    ensure(
        (rate - oracle).abs() <= 0.01,
        format!("rate {rate} vs oracle {oracle:.4}"),
    )?;
    Ok(format!("rate {rate:.4}, oracle {oracle:.4}"))
}

fn attr_key(e: &EpisodeResult, id: &str) -> Option<(String, Vec<String>)> {
    e.shortlist
        .iter()
        .find(|i| i.object_id == id)
        .map(|i| (i.class_label.clone(), i.attributes.clone()))
}

fn qa_lift() -> Outcome {
    let engine = Engine::default();
    let (mut n, mut top1_qa, mut top5_noqa) = (0, 0, 0);
    for seed in 1..=3 {
        let scenarios = suite(6, seed);
        let report = run_benchmark(
            &engine,
            &scenarios,
            &[Method::Miel, Method::MielNoQa],
            &Visibility::BOTH,
        )
        .unwrap();
        let key = |e: &EpisodeResult| (e.scenario_id.clone(), e.level, e.visible);
        let with_qa: BTreeMap<_, _> = report
            .episodes
            .iter()
            .filter(|e| e.method == Method::Miel)
            .map(|e| (key(e), e))
            .collect();
        for e in report.episodes.iter().filter(|e| e.method == Method::MielNoQa) {
            let Some(t) = attr_key(e, &e.target) else { continue };
            let unique = e
                .shortlist
                .iter()
                .filter(|i| i.class_label == t.0 && i.attributes == t.1)
                .count()
                == 1;
            if !unique {
                continue;
            }
            n += 1;
            top5_noqa += usize::from(e.success_top5);
            top1_qa += usize::from(with_qa[&key(e)].success_top1);
        }
    }
    ensure(n >= 100, format!("only {n} qualifying episodes"))?;
    ensure(
        top1_qa == top5_noqa,
        format!("top1 with Q&A {top1_qa}/{n}, top5 without {top5_noqa}/{n}"),
    )?;
    Ok(format!("{top1_qa}/{n} == {top5_noqa}/{n}"))
}

fn ssl_ablation() -> Outcome {
    let engine = Engine::default();
    let scenarios = suite(40, 1);
    ensure(scenarios.len() == 200, format!("{} scenarios", scenarios.len()))?;
    let (mut a, mut b) = (0, 0);
    for (i, scn) in scenarios.iter().enumerate() {
        let level = QueryLevel::ALL[i % 3];
        a += usize::from(
            engine
                .run_episode(scn, level, Method::Miel, Some(Visibility::Hidden))
                .success_top1,
        );
        b += usize::from(
            engine
                .run_episode(scn, level, Method::MielNoSsl, Some(Visibility::Hidden))
                .success_top1,
        );
    }
    let ratio = a as f64 / b as f64;
    ensure(
        b > 0 && ratio >= 1.5,
        format!("miel {a}/200, no-ssl {b}/200, ratio {ratio:.2}"),
    )?;
    Ok(format!("miel {a}/200, no-ssl {b}/200, ratio {ratio:.2}"))
}

fn visibility() -> Outcome {
    let engine = Engine::default();
    let scenarios = suite(6, 2);
    let report = run_benchmark(&engine, &scenarios, &Method::ALL, &Visibility::BOTH).unwrap();
    let strip = |e: &EpisodeResult| {
        let mut v = serde_json::to_value(e).unwrap();
        v.as_object_mut().unwrap().remove("visible");
        v
    };
    let mut by_key: BTreeMap<(Method, String, QueryLevel), [Option<serde_json::Value>; 2]> = BTreeMap::new();
    for e in report.episodes.iter().filter(|e| e.ssl) {
        by_key.entry((e.method, e.scenario_id.clone(), e.level)).or_default()[usize::from(e.visible)] = Some(strip(e));
    }
    let mut compared = 0;
    for ((m, s, l), [h, v]) in &by_key {
        ensure(
            h.is_some() && v.is_some(),
            format!("{m} {s} L{} missing a condition", l.number()),
        )?;
        ensure(h == v, format!("{m} {s} L{} differs across visibility", l.number()))?;
        compared += 1;
    }
    ensure(compared > 0, "nothing compared")?;
    Ok(format!("{compared} episode pairs identical"))
}

fn level_monotonicity() -> Outcome {
    let engine = Engine::default();
    let mut summary = Vec::new();
    let suites = (1..=8)
        .map(|seed| (format!("seed {seed}"), suite(6, seed)))
        .chain([("40 positions".to_string(), suite(40, 1))]);
    for (name, scenarios) in suites {
        let report = run_benchmark(&engine, &scenarios, &[Method::Miel], &Visibility::BOTH).unwrap();
        for v in Visibility::BOTH {
            let r = report.row(Method::Miel, v).unwrap();
            let (l1, l2, l3) = (
                r.top1.level1.rate().unwrap(),
                r.top1.level2.rate().unwrap(),
                r.top1.level3.rate().unwrap(),
            );
            ensure(
                l1 >= l2 && l2 >= l3,
                format!("{name} {v}: {} {} {}", r.top1.level1, r.top1.level2, r.top1.level3),
            )?;
            if v == Visibility::Hidden {
                summary.push(format!("{l1:.2}/{l2:.2}/{l3:.2}"));
            }
        }
    }
    Ok(format!(
        "{} suites, hidden L1/L2/L3 {}",
        summary.len(),
        summary.join(" ")
    ))
}

fn vgpn_oracle(s: &common::RandomScene) -> Option<String> {
    let class = s.query.class_term.as_deref()?;
    let (eye, wrist) = s.obs.skeleton()?;
    let d = wrist - eye;
    let mut best: Option<(f64, String)> = None;
    for o in s.map.objects().iter().filter(|o| o.class_label == class) {
        let v = o.position - eye;
        let cos = (v.x * d.x + v.y * d.y + v.z * d.z)
            / ((v.x * v.x + v.y * v.y + v.z * v.z).sqrt() * (d.x * d.x + d.y * d.y + d.z * d.z).sqrt());
        let angle = cos.clamp(-1.0, 1.0).acos();
        if best
            .as_ref()
            .is_none_or(|(b, id)| angle < *b || (angle == *b && o.id < *id))
        {
            best = Some((angle, o.id.clone()));
        }
    }
    best.map(|b| b.1)
}

fn vgpn() -> Outcome {
    let engine = Engine::default();
    let mut declined = 0;
    for seed in 1..=2 {
        let report = run_benchmark(&engine, &suite(6, seed), &[Method::Vgpn], &Visibility::BOTH).unwrap();
        for e in &report.episodes {
            if e.level == QueryLevel::L3 || !e.skeleton {
                ensure(
                    e.final_id.is_none(),
                    format!("{} L{} returned {:?}", e.scenario_id, e.level.number(), e.final_id),
                )?;
                declined += 1;
            }
        }
    }
    let (mut scenes, mut seed) = (0, 0u64);
    while scenes < 20 {
        seed += 1;
        let s = common::random_scene(seed);
        if s.query.class_term.is_none() || s.obs.skeleton().is_none() {
            continue;
        }
        scenes += 1;
        let got = baseline_vgpn(&s.map, &s.query, &s.obs);
        let want = vgpn_oracle(&s);
        ensure(got == want, format!("scene seed {seed}: {got:?} vs oracle {want:?}"))?;
    }
    Ok(format!("{declined} declined episodes, 20/20 scenes agree"))
}

fn determinism() -> Outcome {
    let mut cfg = EngineConfig::default();
    cfg.ssl.noise_std_deg = 15.0;
    let engine = Engine::new(cfg, DemonstrativeLexicon::default());
    let scenarios = suite(6, 3);
    let a = run_benchmark(&engine, &scenarios, &Method::ALL, &Visibility::BOTH).unwrap();
    let b = run_benchmark(&engine, &suite(6, 3), &Method::ALL, &Visibility::BOTH).unwrap();
    let (ja, jb) = (a.to_json().unwrap(), b.to_json().unwrap());
    ensure(ja == jb, "in-memory reports differ")?;
    let dir = tempfile::tempdir().unwrap();
    write_report(&a, dir.path().join("a")).unwrap();
    write_report(&b, dir.path().join("b")).unwrap();
    for f in ["report.json", "report.csv"] {
        let x = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let y = std::fs::read(dir.path().join("b").join(f)).unwrap();
        ensure(x == y, format!("{f} differs on disk"))?;
    }
    Ok(format!("{} bytes identical", ja.len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("density correctness", Some(5), density),
        ("distribution hygiene", Some(30), hygiene),
        ("ssl gate", Some(10), ssl),
        ("q&a lift identity", Some(60), qa_lift),
        ("ssl ablation direction", Some(120), ssl_ablation),
        ("visibility equivalence", None, visibility),
        ("level monotonicity", None, level_monotonicity),
        ("baseline sanity", None, vgpn),
        ("determinism", None, determinism),
    ];
    let mut failed = 0;
    for (name, limit, f) in criteria {
        let start = Instant::now();
        let mut outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        if let (Ok(_), Some(secs)) = (&outcome, limit) {
            if elapsed > Duration::from_secs(secs) {
                outcome = Err(format!("took {elapsed:.2?}, limit {secs}s"));
            }
        }
        match outcome {
            Ok(detail) => println!("PASS {name} ({elapsed:.2?}): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name} ({elapsed:.2?}): {detail}");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
