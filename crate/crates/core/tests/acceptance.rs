//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line.

mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use common::*;
use frenet_kit::dsl::{parse_expr, DslError};
use frenet_kit::frenet::{
    canonical_matrix, classical_r3, curvatures_degenerate, curvatures_minor, curvatures_qr,
    detect_order, gram_data, profile_delta, qr_diagonal, segment_by_order, DEFAULT_ORDER_TOL,
};
use frenet_kit::linalg::{MatN, DEFAULT_QR_TOL};
use frenet_kit::oracle::{
    arclength_canonical_matrix, arclength_table, definitional_curvatures,
    reconstruction_curvatures, roundtrip_check, serret_reconstruct, SerretSystem,
};
use frenet_kit::{parse_curve, CurveSpec, EngineError};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn minor_kappas(spec: &CurveSpec, t: f64) -> Vec<f64> {
    let cm = canonical_matrix(spec, t).unwrap();
    curvatures_minor(&cm, &gram_data(&cm), DEFAULT_ORDER_TOL)
        .unwrap()
        .kappas
}

fn finish(id: u32, name: &str, failures: &[String], detail: String) {
    report(id, name, failures.is_empty(), &detail);
    for f in failures.iter().take(10) {
        println!("    {f}");
    }
    assert!(failures.is_empty(), "criterion {id} failed");
}

fn time_limit(failures: &mut Vec<String>, start: Instant, limit: Duration) -> Duration {
    let elapsed = start.elapsed();
    if elapsed >= limit {
        failures.push(format!("runtime {elapsed:?} exceeds {limit:?}"));
    }
    elapsed
}

#[test]
fn criterion_01_worked_example_golden() {
    let start = Instant::now();
    let spec = parse_curve("[t, t^2, t^3, t^4]").unwrap();
    let poly = |c: &[f64], t: f64| c.iter().rev().fold(0.0, |acc, v| acc * t * t + v);
    let m1 = [1.0, 4.0, 9.0, 16.0];
    let m2 = [4.0, 36.0, 180.0, 256.0, 144.0];
    let m3 = [144.0, 2304.0, 5184.0, 2304.0];
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for t in grid(-1.0, 1.0, 21) {
        let cm = canonical_matrix(&spec, t).unwrap();
        let gd = gram_data(&cm);
        let (d1, d2, d3) = (poly(&m1, t), poly(&m2, t), poly(&m3, t));
        for (i, want) in [(1, d1), (2, d2), (3, d3)] {
            let e = rel(gd.minor(i), want);
            worst = worst.max(e);
            if e > 1e-10 {
                failures.push(format!("t={t}: det M{i} = {} vs {want}", gd.minor(i)));
            }
        }
        if rel(gd.det_a, 288.0) > 1e-10 {
            failures.push(format!("t={t}: det A = {}", gd.det_a));
        }
        let k1 = d2.sqrt() / d1.powf(1.5);
        let k2 = d3.sqrt() / d2;
        let k3 = 288.0 / d3 * (d2 / d1).sqrt();
        let got = curvatures_minor(&cm, &gd, DEFAULT_ORDER_TOL)
            .unwrap()
            .kappas;
        for (i, want) in [k1, k2, k3].into_iter().enumerate() {
            let e = rel(got[i], want);
            worst = worst.max(e);
            if e > 1e-9 {
                failures.push(format!("t={t}: kappa{} = {} vs {want}", i + 1, got[i]));
            }
        }
    }
    let at0 = minor_kappas(&spec, 0.0);
    if at0 != vec![2.0, 3.0, 4.0] {
        failures.push(format!("t=0: {at0:?}"));
    }
    let elapsed = time_limit(&mut failures, start, Duration::from_secs(1));
    finish(
        1,
        "worked example golden values",
        &failures,
        format!("21 samples, worst relative error {worst:.2e}, kappa(0) = {at0:?}, {elapsed:?}"),
    );
}

#[test]
fn criterion_02_classical_formulas() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let ts = grid(-1.0, 1.0, 11);
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let spec = random_curve(&mut rng, 3, &ts, 1e-6);
        for &t in &ts {
            let cm = canonical_matrix(&spec, t).unwrap();
            let minor = curvatures_minor(&cm, &gram_data(&cm), DEFAULT_ORDER_TOL)
                .unwrap()
                .kappas;
            let (k, tau) = classical_r3(&cm).unwrap();
            let e = profile_delta(&minor, &[k, tau]);
            worst = worst.max(e);
            if e > 1e-8 {
                failures.push(format!("{spec} at t={t}: {minor:?} vs ({k}, {tau})"));
            }
        }
    }
    let elapsed = time_limit(&mut failures, start, Duration::from_secs(5));
    finish(
        2,
        "minor formula agrees with classical R3 formulas",
        &failures,
        format!("100 curves x 11 samples, worst {worst:.2e}, {elapsed:?}"),
    );
}

#[test]
fn criterion_03_cross_method() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut cases = corpus();
    for n in 2..=6 {
        let ts = grid(-1.0, 1.0, 11);
        for _ in 0..10 {
            cases.push((random_curve(&mut rng, n, &ts, cond_floor(n)), ts.clone()));
        }
    }
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    let mut samples = 0;
    for (spec, ts) in &cases {
        for &t in ts {
            let cm = canonical_matrix(spec, t).unwrap();
            let minor = curvatures_minor(&cm, &gram_data(&cm), DEFAULT_ORDER_TOL).unwrap();
            let qr = curvatures_qr(&cm, DEFAULT_ORDER_TOL, DEFAULT_QR_TOL).unwrap();
            let e = profile_delta(&qr.kappas, &minor.kappas);
            worst = worst.max(e);
            samples += 1;
            if e > 1e-8 {
                failures.push(format!(
                    "{spec} at t={t}: qr {:?} minor {:?}",
                    qr.kappas, minor.kappas
                ));
            }
        }
    }
    finish(
        3,
        "minor formula agrees with QR path",
        &failures,
        format!(
            "{} curves, {samples} samples, n in 2..=6, worst {worst:.2e}",
            cases.len()
        ),
    );
}

type Diffeo = (&'static str, fn(f64) -> f64);

#[test]
fn criterion_04_reparametrization_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let diffeos: [Diffeo; 3] = [
        ("2*t + 1", |t| 2.0 * t + 1.0),
        ("t + t^3/3", |t| t + t * t * t / 3.0),
        ("sin(t)/cos(t)", f64::tan),
    ];
    let ts = grid(-0.9, 0.9, 7);
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for i in 0..20 {
        let n = 2 + i % 4;
        let images: Vec<f64> = diffeos
            .iter()
            .flat_map(|(_, phi)| ts.iter().map(|&t| phi(t)))
            .collect();
        let spec = random_curve(&mut rng, n, &images, cond_floor(n));
        for (src, phi) in &diffeos {
            let composed = spec.reparametrized(&parse_expr(src).unwrap());
            for &t in &ts {
                let lhs = minor_kappas(&composed, t);
                let rhs = minor_kappas(&spec, phi(t));
                let e = lhs
                    .iter()
                    .zip(&rhs)
                    .map(|(a, b)| rel(*a, *b))
                    .fold(0.0, f64::max);
                worst = worst.max(e);
                if e > 1e-6 {
                    failures.push(format!("{spec} o ({src}) at t={t}: {lhs:?} vs {rhs:?}"));
                }
            }
        }
    }
    finish(
        4,
        "reparametrization invariance",
        &failures,
        format!("3 diffeomorphisms x 20 curves x 7 samples, worst {worst:.2e}"),
    );
}

#[test]
fn criterion_05_isometries_and_scaling() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ts = grid(-1.0, 1.0, 7);
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    let mut check = |what: &str, got: &[f64], want: &[f64]| {
        let e = profile_delta(got, want);
        worst = worst.max(e);
        if e > 1e-8 {
            failures.push(format!("{what}: {got:?} vs {want:?}"));
        }
    };
    for i in 0..25 {
        let n = 2 + i % 5;
        let spec = random_curve(&mut rng, n, &ts, cond_floor(n));
        let shift: Vec<f64> = (0..n).map(|k| 0.5 * k as f64 - 1.0).collect();
        let rot = random_rotation(&mut rng, n, 1.0);
        let refl = random_rotation(&mut rng, n, -1.0);
        let rotated = transformed(&spec, &rot, &shift, 1.0);
        let reflected = transformed(&spec, &refl, &shift, 1.0);
        let c = 0.25 + i as f64 * 0.15;
        let scaled = transformed(&spec, &MatN::identity(n), &vec![0.0; n], c);
        for &t in &ts {
            let base = minor_kappas(&spec, t);
            check(
                &format!("rotation of {spec} at {t}"),
                &minor_kappas(&rotated, t),
                &base,
            );
            let mut flipped = base.clone();
            *flipped.last_mut().unwrap() *= -1.0;
            check(
                &format!("reflection of {spec} at {t}"),
                &minor_kappas(&reflected, t),
                &flipped,
            );
            let shrunk: Vec<f64> = base.iter().map(|k| k / c).collect();
            check(
                &format!("scaling of {spec} by {c} at {t}"),
                &minor_kappas(&scaled, t),
                &shrunk,
            );
        }
    }
    finish(
        5,
        "rigid motions, reflections and scaling",
        &failures,
        format!("25 curves x 7 samples, n in 2..=6, worst {worst:.2e}"),
    );
}

fn sign_violation(spec: &CurveSpec, t: f64) -> Result<bool, String> {
    let cm = canonical_matrix(spec, t).map_err(|e| e.to_string())?;
    let gd = gram_data(&cm);
    let profile = match curvatures_minor(&cm, &gd, DEFAULT_ORDER_TOL) {
        Ok(p) => p,
        Err(EngineError::OrderDeficient { .. }) => return Ok(false),
        Err(e) => return Err(e.to_string()),
    };
    let n = cm.dim();
    let k = &profile.kappas;
    if k[..n - 2]
        .iter()
        .any(|v| v.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater))
    {
        return Err(format!("non-positive curvature {k:?} of {spec} at t={t}"));
    }
    let last = k[n - 2];
    if profile.last_forced_zero {
        if last != 0.0 {
            return Err(format!("forced zero not reported at t={t}"));
        }
    } else if last.signum() != gd.det_a.signum() {
        return Err(format!(
            "sign of kappa{} = {last} differs from det A = {} for {spec} at t={t}",
            n - 1,
            gd.det_a
        ));
    }
    Ok(true)
}

#[test]
fn criterion_06_positivity_and_sign() {
    let mut failures = Vec::new();
    let mut corpus_samples = 0;
    for (spec, ts) in corpus() {
        for t in ts {
            match sign_violation(&spec, t) {
                Ok(true) => corpus_samples += 1,
                Ok(false) => {}
                Err(e) => failures.push(e),
            }
        }
    }

    let strategy = (2usize..=6)
        .prop_flat_map(|n| {
            (
                Just(n),
                prop::collection::vec(prop::collection::vec(-3.0f64..3.0, n + 3), n),
                -1.5f64..1.5,
            )
        })
        .prop_map(|(n, coeffs, t)| {
            let comps: Vec<String> = coeffs
                .iter()
                .map(|c| {
                    let mut s = format!("{} * sin({} * t + {})", c[0], 0.5 + c[1].abs(), c[2]);
                    for (k, v) in c[3..].iter().enumerate() {
                        s.push_str(&format!(" + {v} * t^{}", k + 1));
                    }
                    s
                })
                .collect();
            (n, format!("[{}]", comps.join(", ")), t)
        });
    let mut runner = TestRunner::new(Config {
        cases: 10_000,
        failure_persistence: None,
        ..Config::default()
    });
    let full_order = std::cell::Cell::new(0usize);
    let outcome = runner.run(&strategy, |(_, src, t)| {
        let spec = parse_curve(&src).unwrap();
        match sign_violation(&spec, t) {
            Ok(full) => {
                full_order.set(full_order.get() + full as usize);
                Ok(())
            }
            Err(e) => Err(TestCaseError::fail(e)),
        }
    });
    if let Err(e) = outcome {
        failures.push(format!("generated: {e}"));
    }
    finish(
        6,
        "positivity of inner curvatures and sign of the last",
        &failures,
        format!(
            "{corpus_samples} corpus samples, 10000 generated samples ({} full order)",
            full_order.get()
        ),
    );
}

#[test]
fn criterion_07_definitional_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut cases: Vec<(CurveSpec, Vec<f64>)> = vec![
        (
            parse_curve("[t, t^2, t^3, t^4]").unwrap(),
            vec![-0.5, 0.0, 0.3, 0.8],
        ),
        (
            parse_curve("[cos(t), sin(t), t]").unwrap(),
            vec![-2.0, 0.0, 1.0, 2.5],
        ),
    ];
    let ts = vec![-0.6, 0.0, 0.7];
    for i in 0..20 {
        cases.push((
            random_curve(&mut rng, 2 + i % 4, &ts, cond_floor(2 + i % 4)),
            ts.clone(),
        ));
    }
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for (spec, ts) in &cases {
        for &t in ts {
            let minor = minor_kappas(spec, t);
            match definitional_curvatures(spec, t) {
                Ok(def) => {
                    let e = profile_delta(&def, &minor);
                    worst = worst.max(e);
                    if e > 1e-4 {
                        failures.push(format!("{spec} at t={t}: {def:?} vs {minor:?}"));
                    }
                }
                Err(e) => failures.push(format!("{spec} at t={t}: {e}")),
            }
        }
    }
    finish(
        7,
        "definitional curvatures agree with minor formula",
        &failures,
        format!("{} curves, worst {worst:.2e}", cases.len()),
    );
}

#[test]
fn criterion_08_r_diagonal() {
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    let mut checked = 0;
    for (src, lo, hi) in [
        ("[t, t^2, t^3, t^4]", -1.0, 1.0),
        ("[cos(t), sin(t), t]", 0.0, 6.0),
        ("[t, t^2, t^3]", -1.0, 1.0),
        ("[t, exp(t)]", -1.0, 2.0),
        ("[cos(t), sin(t), cos(2*t), sin(2*t), t]", -2.0, 2.0),
    ] {
        let spec = parse_curve(src).unwrap();
        let table = arclength_table(&spec, lo, &grid(lo, hi, 33)).unwrap();
        let total = *table.ss.last().unwrap();
        for k in 0..=10 {
            let s = total * k as f64 / 10.0;
            let t = table.t_at(&spec, s).unwrap();
            let cm = arclength_canonical_matrix(&spec, t).unwrap();
            let diag = qr_diagonal(&cm, DEFAULT_QR_TOL).unwrap();
            let kappas = minor_kappas(&spec, t);
            checked += 1;
            if (diag[0] - 1.0).abs() > 1e-6 {
                failures.push(format!("{src} at s={s}: R11 = {}", diag[0]));
            }
            let mut prod = 1.0;
            for j in 1..diag.len() {
                prod *= kappas[j - 1];
                let e = rel(diag[j], prod);
                worst = worst.max(e);
                if e > 1e-4 {
                    failures.push(format!(
                        "{src} at s={s}: R{0}{0} = {1} vs {prod}",
                        j + 1,
                        diag[j]
                    ));
                }
            }
        }
    }
    finish(
        8,
        "R diagonal of the arclength canonical matrix",
        &failures,
        format!("{checked} arclength samples, worst relative {worst:.2e}"),
    );
}

#[test]
fn criterion_09_roundtrip_reconstruction() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for (kappas, span) in [
        (vec![1.0], 2.0 * PI),
        (vec![0.5, 0.5], 4.0 * PI),
        (vec![2.0, 3.0, 4.0], 2.0),
    ] {
        let n = kappas.len() + 1;
        let sys = SerretSystem::constant(kappas.clone());
        let rec = serret_reconstruct(
            &sys,
            (0.0, span),
            &MatN::identity(n),
            &vec![0.0; n],
            span / 4096.0,
        )
        .unwrap();
        if rec.max_orthonormality_drift > 1e-8 {
            failures.push(format!(
                "n={n}: frame drift {}",
                rec.max_orthonormality_drift
            ));
        }
        for (s, got) in reconstruction_curvatures(&rec, 16).unwrap() {
            let e = got
                .iter()
                .zip(&kappas)
                .map(|(a, b)| rel(*a, *b))
                .fold(0.0, f64::max);
            worst = worst.max(e);
            if e > 1e-4 {
                failures.push(format!("n={n} at s={s}: {got:?} vs {kappas:?}"));
            }
        }
        if n == 2 {
            let end = rec.points.last().unwrap();
            let gap = (end[0].powi(2) + end[1].powi(2)).sqrt();
            if gap > 1e-6 {
                failures.push(format!("circle does not close: gap {gap:.2e}"));
            }
        }
    }
    for (src, lo, hi, tol) in [
        ("[t, t^2, t^3, t^4]", -0.5, 0.5, 1e-4),
        ("[cos(t), sin(t), t]", 0.0, 2.0 * PI, 1e-5),
        ("[cos(t), sin(t)]", 0.0, 2.0 * PI, 1e-6),
    ] {
        let spec = parse_curve(src).unwrap();
        let r = roundtrip_check(&spec, &grid(lo, hi, 9)).unwrap();
        worst = worst.max(r.max_kappa_discrepancy);
        if r.max_kappa_discrepancy > tol {
            failures.push(format!(
                "{src}: round-trip discrepancy {:.2e}",
                r.max_kappa_discrepancy
            ));
        }
    }
    let elapsed = time_limit(&mut failures, start, Duration::from_secs(10));
    finish(
        9,
        "Frenet-Serret reconstruction round trip",
        &failures,
        format!("3 constant systems + 3 curves, worst {worst:.2e}, {elapsed:?}"),
    );
}

#[test]
fn criterion_10_degenerate_order() {
    let mut failures = Vec::new();
    let circle = parse_curve("[cos(t), sin(t), 0, 0]").unwrap();
    let ts = grid(-3.0, 3.0, 21);
    let seg = segment_by_order(&circle, &ts, DEFAULT_ORDER_TOL).unwrap();
    if seg.orders.iter().any(|&r| r != 2) || seg.segments.len() != 1 {
        failures.push(format!("embedded circle orders {:?}", seg.orders));
    }
    for &t in &ts {
        let cm = canonical_matrix(&circle, t).unwrap();
        let gd = gram_data(&cm);
        let r = detect_order(&gd, DEFAULT_ORDER_TOL);
        match curvatures_degenerate(&cm, &gd, r) {
            Ok(p) if p.kappas.len() == 1 && (p.kappas[0] - 1.0).abs() <= 1e-9 => {}
            other => failures.push(format!("embedded circle at t={t}: {other:?}")),
        }
    }

    let planar = parse_curve("[t, t^2, 0]").unwrap();
    for t in grid(-2.0, 2.0, 21) {
        let cm = canonical_matrix(&planar, t).unwrap();
        let p = curvatures_minor(&cm, &gram_data(&cm), DEFAULT_ORDER_TOL).unwrap();
        let closed = 2.0 / (1.0 + 4.0 * t * t).powf(1.5);
        let (k, tau) = classical_r3(&cm).unwrap();
        if p.order != 2 || !p.last_forced_zero || p.kappas[1] != 0.0 {
            failures.push(format!("planar parabola at t={t}: {p:?}"));
        }
        if (p.kappas[0] - closed).abs() > 1e-9 || (k - closed).abs() > 1e-9 || tau != 0.0 {
            failures.push(format!(
                "planar parabola at t={t}: kappa1 {} classical ({k}, {tau}) closed {closed}",
                p.kappas[0]
            ));
        }
    }
    finish(
        10,
        "degenerate order handling",
        &failures,
        "embedded circle order 2 with kappa1 = 1, planar parabola kappa2 = 0 flagged".into(),
    );
}

/// Malformed inputs with the byte offset the diagnostic must point at.
const MALFORMED: [(&str, usize); 20] = [
    ("[t,", 3),
    ("", 0),
    ("t, t^2]", 0),
    ("[2t, t]", 2),
    ("[t, t^t]", 6),
    ("[t, sin t]", 8),
    ("[t, (t + 1]", 10),
    ("[t, t +]", 7),
    ("[t, tan(t)]", 4),
    ("[t, t^2", 7),
    ("[t, t] extra", 7),
    ("[t, x]", 4),
    ("[t, t $ 2]", 6),
    ("[t, ]", 4),
    ("[, t]", 1),
    ("[t,, t]", 3),
    ("[t, sin()]", 8),
    ("[t, 2^]", 6),
    ("[t, t * * t]", 8),
    ("[t, sqrt(t]", 10),
];

/// Inputs the grammar documents as valid.
const ACCEPTED: &[&str] = &[
    "[t, t^2, t^3, t^4]",
    "[cos(t), sin(t), 0.5*t]",
    "[ t , -t ]",
    "[1e-3 * t, 2.5E+2 - t]",
    "[-t^2, (-t)^2]",
    "[t^-1, t^(1/2)]",
    "[2^3^0.5 * t, t / 2 / 3]",
    "[exp(-t) * cos(3*t), log(1 + t^2), sqrt(4 + sin(t))]",
    "[t, t - -t, --t]",
    "[((t)), (1 + t) * (1 - t)]",
];

#[test]
fn criterion_11_parser_contract() {
    let mut failures = Vec::new();
    let mut accepted: Vec<String> = ACCEPTED.iter().map(|s| s.to_string()).collect();
    accepted.extend(CORPUS.iter().map(|c| c.0.to_string()));
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 2..=6 {
        for _ in 0..4 {
            let comps: Vec<String> = (0..n).map(|_| random_component(&mut rng, n)).collect();
            accepted.push(format!("[{}]", comps.join(", ")));
        }
    }
    for src in &accepted {
        match parse_curve(src) {
            Ok(spec) => {
                let printed = spec.to_string();
                match parse_curve(&printed) {
                    Ok(again) => {
                        let a: Vec<_> = spec.components().iter().map(|c| &c.ast).collect();
                        let b: Vec<_> = again.components().iter().map(|c| &c.ast).collect();
                        if a != b {
                            failures
                                .push(format!("{src:?} printed as {printed:?} changes the tree"));
                        }
                    }
                    Err(e) => failures.push(format!("{src:?} printed as {printed:?}: {e}")),
                }
            }
            Err(e) => failures.push(format!("{src:?} rejected: {e}")),
        }
    }
    for (src, pos) in MALFORMED {
        match parse_curve(src) {
            Err(DslError::Parse(e)) if e.position == pos && !e.expected.is_empty() => {
                let caret = e.render(src);
                if !caret.lines().any(|l| l.trim_end().ends_with('^')) {
                    failures.push(format!("{src:?}: diagnostic has no caret line"));
                }
            }
            other => failures.push(format!("{src:?}: expected error at {pos}, got {other:?}")),
        }
    }
    if !matches!(parse_curve("[t]"), Err(DslError::Arity { components: 1 })) {
        failures.push("single component accepted".into());
    }
    finish(
        11,
        "parser contract",
        &failures,
        format!(
            "{} accepted inputs round-trip, {} malformed inputs rejected",
            accepted.len(),
            MALFORMED.len()
        ),
    );
}
