//! First-principles oracles: arclength, curvatures by differentiating the
//! frame along arclength, and reconstruction of a curve from its curvatures
//! by integrating the Frenet-Serret system.

use thiserror::Error;

use crate::dsl::{eval_components, eval_components_at, CurveSpec, EvalError};
use crate::frenet::{
    canonical_matrix, curvatures_minor, frenet_frame, gram_data, profile_delta, CanonicalMatrix,
    EngineError, FrenetFrame, DEFAULT_ORDER_TOL,
};
use crate::jet::Jet;
use crate::linalg::{determinant, dot, gram_schmidt_qr, norm, MatN, DEFAULT_QR_TOL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("velocity vanishes at t = {t}")]
    ZeroVelocity { t: f64 },
    #[error("no stable finite-difference step found at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("initial frame is not orthonormal with determinant +1 (deviation {deviation})")]
    NonOrthonormalInitialFrame { deviation: f64 },
    #[error("invalid integration setup: {0}")]
    InvalidSetup(String),
    #[error("quadrature did not converge on [{a}, {b}]")]
    QuadratureFailed { a: f64, b: f64 },
}

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let sum = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * sum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss-Kronrod quadrature; every accepted panel has an error
/// estimate at most `abs_tol`.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
) -> Result<f64, OracleError> {
    if a == b {
        return Ok(0.0);
    }
    let mut stack = vec![(a, b, 0u32)];
    let mut total = 0.0;
    while let Some((lo, hi, depth)) = stack.pop() {
        let (value, err) = gk15(&mut f, lo, hi);
        if !value.is_finite() {
            return Err(OracleError::QuadratureFailed { a: lo, b: hi });
        }
        if err <= abs_tol || depth >= 40 || (hi - lo).abs() < 1e-14 * (1.0 + lo.abs()) {
            if err > abs_tol && depth >= 40 {
                return Err(OracleError::QuadratureFailed { a: lo, b: hi });
            }
            total += value;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
    }
    Ok(total)
}

/// Per-panel absolute error target for arclength integration.
pub const QUADRATURE_TOL: f64 = 1e-10;

/// `|γ'(t)|` without domain checks.
pub fn speed(spec: &CurveSpec, t: f64) -> Result<f64, OracleError> {
    let jets = eval_components_at(spec, &Jet::variable(t, 1))?;
    Ok(jets
        .iter()
        .map(|j| j.coeffs()[1] * j.coeffs()[1])
        .sum::<f64>()
        .sqrt())
}

/// Arclength `s(t) = ∫_{t0}^{t} |γ'|` sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ArclengthTable {
    pub base_t: f64,
    pub ts: Vec<f64>,
    pub ss: Vec<f64>,
}

impl ArclengthTable {
    /// Arclength at an arbitrary `t`, integrating from the nearest node.
    pub fn s_at(&self, spec: &CurveSpec, t: f64) -> Result<f64, OracleError> {
        let k = nearest(&self.ts, t);
        let piece = integrate(
            |x| speed(spec, x).unwrap_or(f64::NAN),
            self.ts[k],
            t,
            QUADRATURE_TOL,
        )?;
        Ok(self.ss[k] + piece)
    }

    /// Inverse lookup `t = s^{-1}(s)`: bracket in the table, then
    /// Newton steps safeguarded by bisection.
    pub fn t_at(&self, spec: &CurveSpec, s: f64) -> Result<f64, OracleError> {
        let last = self.ss.len() - 1;
        let j = match self.ss.partition_point(|&v| v <= s) {
            0 => 0,
            p if p > last => last.saturating_sub(1),
            p => p - 1,
        };
        let (mut lo, mut hi) = if last == 0 {
            (self.ts[0], self.ts[0])
        } else {
            (self.ts[j], self.ts[j + 1])
        };
        if s <= self.ss[0] && last > 0 && s < self.ss[0] {
            lo = f64::NEG_INFINITY;
        }
        if s > self.ss[last] {
            hi = f64::INFINITY;
        }
        // linear initial guess inside the bracket
        let mut t = if last > 0 {
            let (s0, s1) = (self.ss[j], self.ss[j + 1]);
            self.ts[j] + (s - s0) / (s1 - s0) * (self.ts[j + 1] - self.ts[j])
        } else {
            self.ts[0]
        };
        for _ in 0..60 {
            let f = self.s_at(spec, t)? - s;
            if f.abs() <= 1e-13 * (1.0 + s.abs()) {
                return Ok(t);
            }
            if f > 0.0 {
                hi = hi.min(t);
            } else {
                lo = lo.max(t);
            }
            let v = speed(spec, t)?;
            let mut next = t - f / v;
            if !(next > lo && next < hi) || !next.is_finite() {
                if lo.is_finite() && hi.is_finite() {
                    next = 0.5 * (lo + hi);
                } else {
                    next = t - f / v;
                }
            }
            if next == t {
                return Ok(t);
            }
            t = next;
        }
        Ok(t)
    }
}

fn nearest(ts: &[f64], t: f64) -> usize {
    ts.iter()
        .enumerate()
        .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
        .map_or(0, |(i, _)| i)
}

/// Arclength from `t0` at every grid point (negative before `t0`).
pub fn arclength_table(
    spec: &CurveSpec,
    t0: f64,
    grid: &[f64],
) -> Result<ArclengthTable, OracleError> {
    if grid.is_empty() {
        return Err(OracleError::InvalidSetup("empty grid".into()));
    }
    for &t in grid {
        if !spec.contains(t) {
            return Err(EvalError::OutOfDomain {
                t,
                t_min: spec.domain().0,
                t_max: spec.domain().1,
            }
            .into());
        }
    }
    let mut zero_at = None;
    let integrand = |x: f64| match speed(spec, x) {
        Ok(v) => {
            if v == 0.0 && zero_at.is_none() {
                zero_at = Some(x);
            }
            v
        }
        Err(_) => f64::NAN,
    };
    let mut integrand = integrand;
    let mut ss = Vec::with_capacity(grid.len());
    // integrate from t0 to the first node, then node to node
    let mut acc = integrate(&mut integrand, t0, grid[0], QUADRATURE_TOL)?;
    ss.push(acc);
    for w in grid.windows(2) {
        acc += integrate(&mut integrand, w[0], w[1], QUADRATURE_TOL)?;
        ss.push(acc);
    }
    for &t in grid {
        if speed(spec, t)? == 0.0 {
            return Err(OracleError::ZeroVelocity { t });
        }
    }
    if let Some(t) = zero_at {
        return Err(OracleError::ZeroVelocity { t });
    }
    Ok(ArclengthTable {
        base_t: t0,
        ts: grid.to_vec(),
        ss,
    })
}

/// Canonical matrix of the arclength reparametrization at the point `t0`.
///
/// The Taylor series of `s(t)` about `t0` is reverted into a series for
/// `t(s)`, and the components are evaluated on that series, giving exact
/// derivatives `d^k γ / ds^k`.
pub fn arclength_canonical_matrix(
    spec: &CurveSpec,
    t0: f64,
) -> Result<CanonicalMatrix, OracleError> {
    let n = spec.dim();
    let jets = eval_components(spec, t0, n)?;
    let mut speed_sq = Jet::constant(0.0, n - 1);
    for j in &jets {
        let d = j.derivative();
        speed_sq = speed_sq
            .add(&d.mul(&d).map_err(EvalError::from_jet(t0))?)
            .map_err(EvalError::from_jet(t0))?;
    }
    if speed_sq.value() == 0.0 {
        return Err(OracleError::ZeroVelocity { t: t0 });
    }
    let speed = speed_sq.sqrt().map_err(EvalError::from_jet(t0))?;
    // s(t0 + τ) - s(t0) = sum_{k>=1} a_k τ^k with a_k = speed_{k-1} / k
    let a: Vec<f64> = std::iter::once(0.0)
        .chain(
            speed
                .coeffs()
                .iter()
                .enumerate()
                .map(|(k, c)| c / (k + 1) as f64),
        )
        .collect();
    // revert: τ = (σ - sum_{k>=2} a_k τ^k) / a_1, iterated to order n
    let sigma = Jet::variable(0.0, n);
    let mut tau = sigma.scale(1.0 / a[1]).map_err(EvalError::from_jet(t0))?;
    let mut higher = a.clone();
    higher[1] = 0.0;
    for _ in 0..n {
        let rest = tau
            .compose_polynomial(&higher)
            .map_err(EvalError::from_jet(t0))?;
        tau = sigma
            .sub(&rest)
            .and_then(|x| x.scale(1.0 / a[1]))
            .map_err(EvalError::from_jet(t0))?;
    }
    let input = tau
        .add(&Jet::constant(t0, n))
        .map_err(EvalError::from_jet(t0))?;
    let comps = eval_components_at(spec, &input)?;
    let mut cols = vec![vec![0.0; n]; n];
    for (i, jet) in comps.iter().enumerate() {
        let d = jet.derivatives(n).map_err(EvalError::from_jet(t0))?;
        for (j, v) in d.into_iter().enumerate() {
            cols[j][i] = v;
        }
    }
    Ok(CanonicalMatrix::from_columns(t0, &cols)?)
}

impl EvalError {
    fn from_jet(t: f64) -> impl Fn(crate::jet::JetError) -> EvalError {
        move |source| EvalError::Component {
            component: 0,
            t,
            source,
        }
    }
}

/// Default arclength step for [`definitional_curvatures`].
pub const DEFAULT_FD_STEP: f64 = 1e-4;

/// Curvatures from their definition `κ_1 = <T', N_1>`,
/// `κ_i = <N'_{i-1}, N_i>`, with derivatives taken along arclength by
/// central differences of the frame.
///
/// The parameter step is `h = DEFAULT_FD_STEP / s'(t0)` and is refined by
/// halving; two successive Richardson-extrapolated estimates must agree
/// before a result is returned.
pub fn definitional_curvatures(spec: &CurveSpec, t0: f64) -> Result<Vec<f64>, OracleError> {
    let cm0 = canonical_matrix(spec, t0)?;
    let frame0 = frenet_frame(&cm0, DEFAULT_QR_TOL)?;
    let speed0 = cm0.speed();
    let n = cm0.dim();

    let estimate = |h: f64| -> Result<Vec<f64>, OracleError> {
        let fwd = aligned_frame(spec, t0 + h, &frame0)?;
        let bwd = aligned_frame(spec, t0 - h, &frame0)?;
        let vectors0 = frame0.vectors();
        Ok((1..n)
            .map(|i| {
                let deriv: Vec<f64> = fwd[i - 1]
                    .iter()
                    .zip(&bwd[i - 1])
                    .map(|(p, m)| (p - m) / (2.0 * h * speed0))
                    .collect();
                dot(&deriv, &vectors0[i])
            })
            .collect())
    };

    let mut h = DEFAULT_FD_STEP / speed0;
    let mut coarse = estimate(h)?;
    let mut previous: Option<Vec<f64>> = None;
    for _ in 0..8 {
        let fine = estimate(0.5 * h)?;
        let extrapolated: Vec<f64> = fine
            .iter()
            .zip(&coarse)
            .map(|(f, c)| (4.0 * f - c) / 3.0)
            .collect();
        if let Some(prev) = &previous {
            if profile_delta(&extrapolated, prev) <= 1e-7 {
                return Ok(extrapolated);
            }
        }
        previous = Some(extrapolated);
        coarse = fine;
        h *= 0.5;
    }
    Err(OracleError::StepUnderflow { t: t0 })
}

/// Frame at `t`, with each vector sign-aligned to `reference`.
fn aligned_frame(
    spec: &CurveSpec,
    t: f64,
    reference: &FrenetFrame,
) -> Result<Vec<Vec<f64>>, OracleError> {
    let cm = canonical_matrix(spec, t)?;
    let frame = frenet_frame(&cm, DEFAULT_QR_TOL)?;
    Ok(frame
        .vectors()
        .into_iter()
        .zip(reference.vectors())
        .map(|(v, r)| {
            if dot(&v, &r) < 0.0 {
                v.iter().map(|x| -x).collect()
            } else {
                v
            }
        })
        .collect())
}

type CurvatureFn = Box<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// Curvature functions `s -> (κ_1(s), ..., κ_{n-1}(s))` in dimension `n`.
pub struct SerretSystem {
    dim: usize,
    curvatures: CurvatureFn,
}

impl SerretSystem {
    pub fn new(dim: usize, curvatures: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static) -> Self {
        SerretSystem {
            dim,
            curvatures: Box::new(curvatures),
        }
    }

    pub fn constant(kappas: Vec<f64>) -> Self {
        let dim = kappas.len() + 1;
        SerretSystem::new(dim, move |_| kappas.clone())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn curvatures_at(&self, s: f64) -> Vec<f64> {
        (self.curvatures)(s)
    }

    /// Antisymmetric tridiagonal `C(s)` with `C[i+1][i] = κ_{i+1}`.
    pub fn matrix_at(&self, s: f64) -> MatN {
        let kappas = self.curvatures_at(s);
        let mut c = MatN::zeros(self.dim, self.dim);
        for (i, k) in kappas.iter().enumerate().take(self.dim - 1) {
            c[(i + 1, i)] = *k;
            c[(i, i + 1)] = -*k;
        }
        c
    }
}

impl std::fmt::Debug for SerretSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SerretSystem")
            .field("dim", &self.dim)
            .finish()
    }
}

/// Sampled output of [`serret_reconstruct`].
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub s: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub frames: Vec<MatN>,
    /// Largest `|FᵀF - I|_F` over all stored frames.
    pub max_orthonormality_drift: f64,
}

/// Integrates `F' = F C(s)`, `γ' = T` with classical RK4, re-projecting `F`
/// onto the rotation group (QR with positive diagonal) after every step.
pub fn serret_reconstruct(
    sys: &SerretSystem,
    s_span: (f64, f64),
    f0: &MatN,
    p0: &[f64],
    step: f64,
) -> Result<Reconstruction, OracleError> {
    let n = sys.dim;
    if f0.n_rows() != n || f0.n_cols() != n || p0.len() != n {
        return Err(OracleError::InvalidSetup(format!(
            "frame and point must have dimension {n}"
        )));
    }
    if !(step > 0.0) || !(s_span.1 > s_span.0) {
        return Err(OracleError::InvalidSetup(
            "step and span must be positive".into(),
        ));
    }
    let deviation = orthonormality_drift(f0);
    let det = determinant(f0).map_err(EngineError::from)?;
    if deviation > 1e-10 || (det - 1.0).abs() > 1e-10 {
        return Err(OracleError::NonOrthonormalInitialFrame {
            deviation: deviation.max((det - 1.0).abs()),
        });
    }

    let steps = ((s_span.1 - s_span.0) / step).ceil().max(1.0) as usize;
    let h = (s_span.1 - s_span.0) / steps as f64;

    let mut s_out = Vec::with_capacity(steps + 1);
    let mut points = Vec::with_capacity(steps + 1);
    let mut frames = Vec::with_capacity(steps + 1);
    let mut frame = f0.clone();
    let mut point = p0.to_vec();
    let mut max_drift = 0.0f64;
    s_out.push(s_span.0);
    points.push(point.clone());
    frames.push(frame.clone());

    // state derivative: (F C(s), F e_1)
    let deriv = |s: f64, f: &MatN| -> (MatN, Vec<f64>) {
        let c = sys.matrix_at(s);
        (f.matmul(&c).expect("square frames"), f.column(0))
    };
    let axpy = |f: &MatN, p: &[f64], df: &MatN, dp: &[f64], scale: f64| -> (MatN, Vec<f64>) {
        let mut g = f.clone();
        for i in 0..n {
            for j in 0..n {
                g[(i, j)] += scale * df[(i, j)];
            }
        }
        let q = p.iter().zip(dp).map(|(a, b)| a + scale * b).collect();
        (g, q)
    };

    for k in 0..steps {
        let s = s_span.0 + k as f64 * h;
        let (k1f, k1p) = deriv(s, &frame);
        let (f2, p2) = axpy(&frame, &point, &k1f, &k1p, 0.5 * h);
        let (k2f, k2p) = deriv(s + 0.5 * h, &f2);
        let (f3, p3) = axpy(&frame, &point, &k2f, &k2p, 0.5 * h);
        let (k3f, k3p) = deriv(s + 0.5 * h, &f3);
        let (f4, p4) = axpy(&frame, &point, &k3f, &k3p, h);
        let (k4f, k4p) = deriv(s + h, &f4);
        let _ = (p2, p3, p4);
        for i in 0..n {
            for j in 0..n {
                frame[(i, j)] +=
                    h / 6.0 * (k1f[(i, j)] + 2.0 * k2f[(i, j)] + 2.0 * k3f[(i, j)] + k4f[(i, j)]);
            }
            point[i] += h / 6.0 * (k1p[i] + 2.0 * k2p[i] + 2.0 * k3p[i] + k4p[i]);
        }
        frame = project_to_rotation(&frame)?;
        max_drift = max_drift.max(orthonormality_drift(&frame));
        s_out.push(s + h);
        points.push(point.clone());
        frames.push(frame.clone());
    }

    Ok(Reconstruction {
        s: s_out,
        points,
        frames,
        max_orthonormality_drift: max_drift,
    })
}

fn project_to_rotation(f: &MatN) -> Result<MatN, OracleError> {
    let qr = gram_schmidt_qr(&f.columns(), 1e-12).map_err(EngineError::from)?;
    if qr.rank() != f.n_cols() {
        return Err(OracleError::InvalidSetup(
            "frame collapsed during integration".into(),
        ));
    }
    Ok(qr.q)
}

/// `|FᵀF - I|_F`.
pub fn orthonormality_drift(f: &MatN) -> f64 {
    let ftf = f.transpose().matmul(f).expect("square");
    ftf.frobenius_distance(&MatN::identity(f.n_cols()))
}

/// Finite-difference weights (Fornberg) for the `m`-th derivative at `x0`
/// using the given nodes.
pub fn fd_weights(nodes: &[f64], x0: f64, m: usize) -> Vec<f64> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|row| row[m]).collect()
}

/// Result of [`roundtrip_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct RoundtripReport {
    pub max_kappa_discrepancy: f64,
    pub max_frame_drift: f64,
    pub samples_compared: usize,
}

/// Forward curvatures, Frenet-Serret reconstruction, forward curvatures of
/// the reconstruction.
///
/// The reconstruction is re-analyzed through the ordinary pipeline: its
/// arclength canonical matrix is assembled from `T` and finite-difference
/// derivatives of `T` along the sampled frames, then fed to the minor
/// formula. The returned discrepancy is the largest [`profile_delta`]
/// between those curvatures and the input ones.
pub fn roundtrip_check(spec: &CurveSpec, grid: &[f64]) -> Result<RoundtripReport, OracleError> {
    let n = spec.dim();
    let t0 = *grid
        .first()
        .ok_or_else(|| OracleError::InvalidSetup("empty grid".into()))?;
    let table = arclength_table(spec, t0, grid)?;
    let s_end = *table.ss.last().expect("non-empty");
    if !(s_end > 0.0) {
        return Err(OracleError::InvalidSetup(
            "grid spans zero arclength".into(),
        ));
    }

    let forward = |s: f64| -> Result<Vec<f64>, OracleError> {
        let t = table.t_at(spec, s)?;
        let cm = canonical_matrix(spec, t)?;
        Ok(curvatures_minor(&cm, &gram_data(&cm), DEFAULT_ORDER_TOL)?.kappas)
    };

    // Tabulate κ(s) on a fine arclength grid, then interpolate with local
    // cubic Lagrange polynomials inside the integrator.
    let table_points = 1024;
    let ds = s_end / table_points as f64;
    let kappa_table: Vec<Vec<f64>> = (0..=table_points)
        .map(|k| forward(k as f64 * ds))
        .collect::<Result<_, _>>()?;
    let kappa_table = std::sync::Arc::new(kappa_table);
    let interp_table = kappa_table.clone();
    let sys = SerretSystem::new(n, move |s| lagrange_interp(&interp_table, ds, s));

    let cm0 = canonical_matrix(spec, t0)?;
    let f0 = frenet_frame(&cm0, DEFAULT_QR_TOL)?.matrix();
    let p0 = spec.point(t0);
    let steps = 4096;
    let rec = serret_reconstruct(&sys, (0.0, s_end), &f0, &p0, s_end / steps as f64)?;

    let mut max_delta = 0.0f64;
    let mut compared = 0;
    for (s, got) in reconstruction_curvatures(&rec, steps / 256)? {
        max_delta = max_delta.max(profile_delta(&got, &forward(s)?));
        compared += 1;
    }

    Ok(RoundtripReport {
        max_kappa_discrepancy: max_delta,
        max_frame_drift: rec.max_orthonormality_drift,
        samples_compared: compared,
    })
}

/// Curvatures of a reconstructed curve, sampled every `stride` stored
/// steps away from the ends.
///
/// At each sample the arclength canonical matrix is assembled from `T` and
/// finite-difference derivatives of `T` over `2n + 1` neighbouring samples,
/// then passed to the minor formula.
pub fn reconstruction_curvatures(
    rec: &Reconstruction,
    stride: usize,
) -> Result<Vec<(f64, Vec<f64>)>, OracleError> {
    let stride = stride.max(1);
    let n = rec.frames[0].n_cols();
    let steps = rec.s.len() - 1;
    let reach = n * stride;
    let mut out = Vec::new();
    let mut k = reach;
    while k + reach <= steps {
        let idx: Vec<usize> = (0..=2 * n).map(|j| k - reach + j * stride).collect();
        let nodes: Vec<f64> = idx.iter().map(|&i| rec.s[i]).collect();
        let tangents: Vec<Vec<f64>> = idx.iter().map(|&i| rec.frames[i].column(0)).collect();
        let mut cols = vec![rec.frames[k].column(0)];
        for order in 1..n {
            let w = fd_weights(&nodes, rec.s[k], order);
            let col = (0..n)
                .map(|r| w.iter().zip(&tangents).map(|(wi, tv)| wi * tv[r]).sum())
                .collect();
            cols.push(col);
        }
        let cm = CanonicalMatrix::from_columns(rec.s[k], &cols)?;
        let profile = curvatures_minor(&cm, &gram_data(&cm), DEFAULT_ORDER_TOL)?;
        out.push((rec.s[k], profile.kappas));
        k += stride;
    }
    Ok(out)
}

/// Four-point Lagrange interpolation in a uniformly spaced table of vectors.
fn lagrange_interp(table: &[Vec<f64>], ds: f64, s: f64) -> Vec<f64> {
    let last = table.len() - 1;
    let x = (s / ds).clamp(0.0, last as f64);
    let base = (x.floor() as usize)
        .saturating_sub(1)
        .min(last.saturating_sub(3));
    let nodes: Vec<usize> = (base..(base + 4).min(last + 1)).collect();
    let weights: Vec<f64> = nodes
        .iter()
        .map(|&i| {
            nodes
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| (x - j as f64) / (i as f64 - j as f64))
                .product()
        })
        .collect();
    let dim = table[0].len();
    (0..dim)
        .map(|c| {
            nodes
                .iter()
                .zip(&weights)
                .map(|(&i, w)| w * table[i][c])
                .sum()
        })
        .collect()
}

/// Euclidean distance between two points.
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    norm(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>())
}
