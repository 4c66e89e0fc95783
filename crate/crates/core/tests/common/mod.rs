#![allow(dead_code)]

use frenet_kit::dsl::{BinOp, Expr};
use frenet_kit::frenet::{canonical_matrix, gram_data};
use frenet_kit::linalg::{determinant, gram_schmidt_qr, MatN};
use frenet_kit::{parse_curve, CurveSpec};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Fixed curves of full order on the listed interval, n = 2..=6.
pub const CORPUS: &[(&str, f64, f64)] = &[
    ("[cos(t), sin(t)]", -3.0, 3.0),
    ("[2*cos(t), 2*sin(t)]", -3.0, 3.0),
    ("[cos(t), -sin(t)]", -3.0, 3.0),
    ("[t, t^2]", -1.0, 1.0),
    ("[t, exp(t)]", -1.0, 2.0),
    ("[cos(t), sin(t), t]", -3.0, 3.0),
    ("[cos(t), sin(t), 0.5*t]", 0.0, 6.0),
    ("[t, t^2, t^3]", -1.0, 1.0),
    ("[t, t^2, -t^3]", -1.0, 1.0),
    ("[exp(t)*cos(t), exp(t)*sin(t), exp(t)]", -1.0, 1.0),
    ("[t, t^2, t^3, t^4]", -1.0, 1.0),
    ("[cos(t), sin(t), cos(2*t), sin(2*t)]", -3.0, 3.0),
    ("[t, t^2, t^3, exp(t)]", 0.5, 2.0),
    ("[t, t^2, t^3, t^4, t^5]", -1.0, 1.0),
    ("[cos(t), sin(t), cos(2*t), sin(2*t), t]", -2.0, 2.0),
    ("[t, t^2, t^3, t^4, t^5, t^6]", -1.0, 1.0),
    (
        "[cos(t), sin(t), cos(2*t), sin(2*t), cos(3*t), sin(3*t)]",
        -2.0,
        2.0,
    ),
    (
        "[t, sqrt(1 + t^2), log(2 + t), t^3, exp(-t), t^5 / 20]",
        -0.5,
        0.5,
    ),
];

pub fn corpus() -> Vec<(CurveSpec, Vec<f64>)> {
    CORPUS
        .iter()
        .map(|&(src, lo, hi)| {
            let spec = parse_curve(src).unwrap().with_label(src);
            (spec, grid(lo, hi, 11))
        })
        .collect()
}

pub fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Smallest normalized leading minor of `AᵀA` over the points.
pub fn conditioning(spec: &CurveSpec, ts: &[f64]) -> f64 {
    ts.iter()
        .map(|&t| match canonical_matrix(spec, t) {
            Ok(cm) => gram_data(&cm)
                .normalized_minors()
                .into_iter()
                .fold(f64::INFINITY, f64::min),
            Err(_) => 0.0,
        })
        .fold(f64::INFINITY, f64::min)
}

fn coef(rng: &mut ChaCha8Rng) -> f64 {
    let v: f64 = rng.gen_range(-2.0..2.0);
    (v * 1000.0).round() / 1000.0
}

/// A random component mixing a polynomial of degree `degree` with one
/// sinusoid, written in the DSL.
pub fn random_component(rng: &mut ChaCha8Rng, degree: usize) -> String {
    let mut terms = vec![format!("{}", coef(rng))];
    for k in 1..=degree {
        terms.push(format!("{} * t^{k}", coef(rng)));
    }
    let (a, w, p) = (coef(rng), 0.5 + coef(rng).abs(), coef(rng));
    if rng.gen_bool(0.5) {
        terms.push(format!("{a} * sin({w} * t + {p})"));
    } else {
        terms.push(format!("{a} * cos({w} * t + {p})"));
    }
    terms.join(" + ")
}

/// Typical conditioning floor for random curves in Rⁿ: the derivative
/// columns of a random smooth curve become more nearly dependent as `n`
/// grows, so the rejection threshold is relaxed with the dimension.
pub fn cond_floor(n: usize) -> f64 {
    10f64.powi(-2 * n as i32)
}

/// A random curve in Rⁿ whose normalized minors stay above `min_cond` at
/// every point of `ts`.
pub fn random_curve(rng: &mut ChaCha8Rng, n: usize, ts: &[f64], min_cond: f64) -> CurveSpec {
    loop {
        let comps: Vec<String> = (0..n).map(|_| random_component(rng, n)).collect();
        let src = format!("[{}]", comps.join(", "));
        let spec = parse_curve(&src).unwrap().with_label(src);
        if conditioning(&spec, ts) > min_cond {
            return spec;
        }
    }
}

pub fn random_rotation(rng: &mut ChaCha8Rng, n: usize, det_sign: f64) -> MatN {
    loop {
        let cols: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let Ok(qr) = gram_schmidt_qr(&cols, 1e-6) else {
            continue;
        };
        if qr.rank() < n {
            continue;
        }
        let mut q = qr.q;
        if determinant(&q).unwrap().signum() != det_sign {
            for i in 0..n {
                q[(i, 0)] = -q[(i, 0)];
            }
        }
        return q;
    }
}

fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
    Expr::Binary(op, Box::new(a), Box::new(b))
}

/// `x ↦ scale·Q x + shift` applied to the components of `spec`.
pub fn transformed(spec: &CurveSpec, q: &MatN, shift: &[f64], scale: f64) -> CurveSpec {
    let n = spec.dim();
    let exprs = (0..n)
        .map(|i| {
            let mut acc = Expr::Num(shift[i]);
            for j in 0..n {
                let term = bin(
                    BinOp::Mul,
                    Expr::Num(scale * q[(i, j)]),
                    spec.components()[j].ast.clone(),
                );
                acc = bin(BinOp::Add, acc, term);
            }
            acc
        })
        .collect();
    CurveSpec::from_exprs(exprs).unwrap()
}

/// Relative difference scaled by the larger magnitude.
pub fn rel(a: f64, b: f64) -> f64 {
    let d = a.abs().max(b.abs());
    if d == 0.0 {
        0.0
    } else {
        (a - b).abs() / d
    }
}

pub fn report(id: u32, name: &str, ok: bool, detail: &str) {
    println!(
        "criterion {id:>2} [{}] {name}: {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
}
