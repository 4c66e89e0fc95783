//! Canonical matrix, Gram data, Frenet frames and generalized curvatures.
//!
//! For a curve `γ` in `R^n` the canonical matrix `A(t)` has the derivatives
//! `γ'(t), ..., γ^(n)(t)` as columns. With `B = AᵀA` and `M_i` its leading
//! `i x i` block (`det M_0 := 1`), the curvatures of a curve of order `n - 1`
//! are
//!
//! ```text
//! κ_1     = sqrt(det M_2) / |γ'|^3                               (n >= 3)
//! κ_i     = sqrt(det M_{i+1} det M_{i-1}) / (|γ'| det M_i)      (2 <= i <= n-2)
//! κ_{n-1} = det A sqrt(det M_{n-2}) / (|γ'| det M_{n-1})
//! ```
//!
//! The QR route factors `A = F R` with `F` the Frenet frame and recovers
//! `κ_i = R_{i+1,i+1} / (|γ'| R_{i,i})`; it shares no arithmetic with the
//! minor route beyond the derivative columns.

use thiserror::Error;

use crate::dsl::{eval_components, CurveSpec, EvalError};
use crate::linalg::{
    determinant, dot, generalized_cross, gram_matrix, gram_schmidt_qr, leading_principal_minors,
    norm, normalized_gram_minors, LinalgError, MatN, DEFAULT_QR_TOL,
};

/// Default threshold on the Hadamard-normalized minors `det M_j / prod |γ^(i)|^2`,
/// roughly a squared `1e-9` residual.
pub const DEFAULT_ORDER_TOL: f64 = 1e-18;

/// Largest ambient dimension accepted unless raised explicitly.
pub const DEFAULT_MAX_DIM: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineConfig {
    pub tol_order: f64,
    pub qr_tol: f64,
    pub max_dim: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            tol_order: DEFAULT_ORDER_TOL,
            qr_tol: DEFAULT_QR_TOL,
            max_dim: DEFAULT_MAX_DIM,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("velocity vanishes at t = {t}; not a regular curve point")]
    ZeroVelocity { t: f64 },
    #[error(
        "order {order} at t = {t} is below the required {required}; \
         split the domain with segment_by_order and use degenerate mode"
    )]
    OrderDeficient {
        t: f64,
        order: usize,
        required: usize,
    },
    #[error("dimension {dim} exceeds the configured maximum {max}")]
    DimensionTooLarge { dim: usize, max: usize },
    #[error("expected dimension {expected}, found {found}")]
    WrongDimension { expected: usize, found: usize },
    #[error("order {order} is not a degenerate order for dimension {dim}")]
    InvalidOrder { order: usize, dim: usize },
}

/// `A(t) = [γ'(t) | ... | γ^(n)(t)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalMatrix {
    pub at_t: f64,
    a: MatN,
}

impl CanonicalMatrix {
    /// Assembles the matrix from derivative columns `γ', γ'', ...`.
    pub fn from_columns(at_t: f64, cols: &[Vec<f64>]) -> Result<Self, EngineError> {
        let a = MatN::from_columns(cols)?;
        if !a.is_square() || a.n_rows() < 2 {
            return Err(LinalgError::NonSquare {
                rows: a.n_rows(),
                cols: a.n_cols(),
            }
            .into());
        }
        if !a.is_finite() {
            return Err(LinalgError::DimensionMismatch("non-finite derivative".into()).into());
        }
        if cols[0].iter().all(|&v| v == 0.0) {
            return Err(EngineError::ZeroVelocity { t: at_t });
        }
        Ok(CanonicalMatrix { at_t, a })
    }

    pub fn dim(&self) -> usize {
        self.a.n_rows()
    }

    pub fn matrix(&self) -> &MatN {
        &self.a
    }

    /// `γ^(j+1)(t)` for zero-based `j`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.a.column(j)
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        self.a.columns()
    }

    /// `|γ'(t)|`, the speed `s'(t)`.
    pub fn speed(&self) -> f64 {
        norm(&self.column(0))
    }
}

/// Canonical matrix of `spec` at `t0` with the default dimension cap.
pub fn canonical_matrix(spec: &CurveSpec, t0: f64) -> Result<CanonicalMatrix, EngineError> {
    canonical_matrix_with(spec, t0, &EngineConfig::default())
}

pub fn canonical_matrix_with(
    spec: &CurveSpec,
    t0: f64,
    config: &EngineConfig,
) -> Result<CanonicalMatrix, EngineError> {
    let n = spec.dim();
    if n > config.max_dim {
        return Err(EngineError::DimensionTooLarge {
            dim: n,
            max: config.max_dim,
        });
    }
    let jets = eval_components(spec, t0, n)?;
    let mut cols = vec![vec![0.0; n]; n];
    for (i, jet) in jets.iter().enumerate() {
        let d = jet.derivatives(n).map_err(|source| EvalError::Component {
            component: i + 1,
            t: t0,
            source,
        })?;
        for (j, v) in d.into_iter().enumerate() {
            cols[j][i] = v;
        }
    }
    CanonicalMatrix::from_columns(t0, &cols)
}

/// `B = AᵀA`, its leading principal minors and `det A`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramData {
    pub b: MatN,
    /// `det M_1, ..., det M_n`.
    pub minors: Vec<f64>,
    pub det_a: f64,
    /// `det M_j / prod_{i <= j} |γ^(i)|^2` evaluated from `A` directly (see
    /// [`normalized_gram_minors`]). Used for order detection, where minors
    /// taken from `B` cannot resolve values below about `1e-16`.
    pub volumes: Vec<f64>,
}

impl GramData {
    pub fn dim(&self) -> usize {
        self.minors.len()
    }

    /// `det M_i` with `det M_0 = 1`.
    pub fn minor(&self, i: usize) -> f64 {
        if i == 0 {
            1.0
        } else {
            self.minors[i - 1]
        }
    }

    /// Hadamard scales `prod_{i <= j} |γ^(i)|^2` for `j = 1..=n`.
    pub fn scales(&self) -> Vec<f64> {
        let mut acc = 1.0;
        (0..self.dim())
            .map(|i| {
                acc *= self.b[(i, i)];
                acc
            })
            .collect()
    }

    /// Minors divided by their Hadamard scale, each in `[0, 1]` up to rounding.
    pub fn normalized_minors(&self) -> Vec<f64> {
        self.minors
            .iter()
            .zip(self.scales())
            .map(|(&m, s)| if s > 0.0 { m / s } else { 0.0 })
            .collect()
    }
}

pub fn gram_data(cm: &CanonicalMatrix) -> GramData {
    let cols = cm.columns();
    let b = gram_matrix(&cols).expect("canonical columns share a length");
    let minors = leading_principal_minors(&b).expect("Gram matrix is square");
    let det_a = determinant(cm.matrix()).expect("canonical matrix is square");
    let volumes = normalized_gram_minors(&cols).expect("canonical columns share a length");
    GramData {
        b,
        minors,
        det_a,
        volumes,
    }
}

/// Largest `r` such that every normalized minor up to `r` exceeds `tol`.
/// Always at least 1 for a regular point.
pub fn detect_order(gd: &GramData, tol: f64) -> usize {
    order_from_ratios(&gd.volumes, tol)
}

fn order_from_ratios(ratios: &[f64], tol: f64) -> usize {
    ratios
        .iter()
        .position(|&r| !(r > tol))
        .unwrap_or(ratios.len())
        .max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    MinorFormula,
    QrPath,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureProfile {
    pub t: f64,
    /// `κ_1, ..., κ_{n-1}`, or `κ_1, ..., κ_{r-1}` in degenerate mode.
    pub kappas: Vec<f64>,
    pub order: usize,
    pub method: Method,
    pub degenerate: bool,
    /// Set when `det A` is numerically zero and `κ_{n-1}` was reported as
    /// exactly `0.0`.
    pub last_forced_zero: bool,
}

/// Curvatures from the leading principal minors of `AᵀA`.
pub fn curvatures_minor(
    cm: &CanonicalMatrix,
    gd: &GramData,
    tol_order: f64,
) -> Result<CurvatureProfile, EngineError> {
    let n = cm.dim();
    let order = detect_order(gd, tol_order);
    if order < n - 1 {
        return Err(EngineError::OrderDeficient {
            t: cm.at_t,
            order,
            required: n - 1,
        });
    }
    let m = |i: usize| gd.minor(i);
    let speed = m(1).sqrt();
    let mut kappas = Vec::with_capacity(n - 1);
    for i in 1..n - 1 {
        kappas.push((m(i + 1) * m(i - 1)).sqrt() / (speed * m(i)));
    }
    let last_forced_zero = order < n;
    let last = if last_forced_zero {
        0.0
    } else {
        gd.det_a * m(n - 2).sqrt() / (speed * m(n - 1))
    };
    kappas.push(last);

    if n >= 3 {
        debug_assert!(close(
            kappas[0],
            m(2).sqrt() / (speed * speed * speed),
            1e-10
        ));
    }
    if n >= 4 {
        debug_assert!(close(kappas[1], m(3).sqrt() / m(2), 1e-10));
    }
    if n == 3 && !last_forced_zero {
        debug_assert!(close(kappas[1], gd.det_a / m(2), 1e-10));
    }

    Ok(CurvatureProfile {
        t: cm.at_t,
        kappas,
        order,
        method: Method::MinorFormula,
        degenerate: false,
        last_forced_zero,
    })
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Orthonormal, positively oriented frame `{T, N_1, ..., N_{n-1}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrenetFrame {
    pub t_vec: Vec<f64>,
    pub normals: Vec<Vec<f64>>,
    pub frame_det: f64,
}

impl FrenetFrame {
    /// Frame vectors in order `T, N_1, ..., N_{n-1}`.
    pub fn vectors(&self) -> Vec<Vec<f64>> {
        std::iter::once(self.t_vec.clone())
            .chain(self.normals.iter().cloned())
            .collect()
    }

    /// `F = [T | N_1 | ... | N_{n-1}]`.
    pub fn matrix(&self) -> MatN {
        MatN::from_columns(&self.vectors()).expect("frame vectors share a length")
    }
}

/// Frame together with the full diagonal of `R` in `A = F R`.
fn frame_and_diagonal(
    cm: &CanonicalMatrix,
    qr_tol: f64,
) -> Result<(FrenetFrame, Vec<f64>), EngineError> {
    let n = cm.dim();
    let cols = cm.columns();
    let qr = gram_schmidt_qr(&cols[..n - 1], qr_tol)?;
    if let Some(j) = qr.dependent_at() {
        return Err(EngineError::OrderDeficient {
            t: cm.at_t,
            order: j,
            required: n - 1,
        });
    }
    let mut vectors = qr.q.columns();
    let last = generalized_cross(&vectors)?;
    let mut diagonal = qr.diagonal();
    diagonal.push(dot(&cols[n - 1], &last));
    vectors.push(last);
    let frame_det = determinant(&MatN::from_columns(&vectors)?)?;
    let mut it = vectors.into_iter();
    let t_vec = it.next().expect("n >= 2");
    Ok((
        FrenetFrame {
            t_vec,
            normals: it.collect(),
            frame_det,
        },
        diagonal,
    ))
}

/// Frenet frame: Gram-Schmidt on `γ', ..., γ^(n-1)` and the generalized
/// cross product for `N_{n-1}`.
pub fn frenet_frame(cm: &CanonicalMatrix, qr_tol: f64) -> Result<FrenetFrame, EngineError> {
    frame_and_diagonal(cm, qr_tol).map(|(frame, _)| frame)
}

/// Diagonal `R_11, ..., R_nn` of `A = F R`; the last entry carries the sign
/// of `det A`.
pub fn qr_diagonal(cm: &CanonicalMatrix, qr_tol: f64) -> Result<Vec<f64>, EngineError> {
    frame_and_diagonal(cm, qr_tol).map(|(_, d)| d)
}

/// Curvatures from diagonal ratios of the QR factor of `A(t)`.
pub fn curvatures_qr(
    cm: &CanonicalMatrix,
    tol_order: f64,
    qr_tol: f64,
) -> Result<CurvatureProfile, EngineError> {
    let n = cm.dim();
    let diag = qr_diagonal(cm, qr_tol)?;
    let mut acc = 1.0;
    let ratios: Vec<f64> = diag
        .iter()
        .enumerate()
        .map(|(j, r)| {
            let col_sq = dot(&cm.column(j), &cm.column(j));
            acc *= r * r / col_sq;
            acc
        })
        .collect();
    let order = order_from_ratios(&ratios, tol_order);
    if order < n - 1 {
        return Err(EngineError::OrderDeficient {
            t: cm.at_t,
            order,
            required: n - 1,
        });
    }
    let speed = cm.speed();
    let last_forced_zero = order < n;
    let kappas = (0..n - 1)
        .map(|i| {
            if i == n - 2 && last_forced_zero {
                0.0
            } else {
                diag[i + 1] / (speed * diag[i])
            }
        })
        .collect();
    Ok(CurvatureProfile {
        t: cm.at_t,
        kappas,
        order,
        method: Method::QrPath,
        degenerate: false,
        last_forced_zero,
    })
}

/// Classical curvature and torsion of a space curve.
pub fn classical_r3(cm: &CanonicalMatrix) -> Result<(f64, f64), EngineError> {
    if cm.dim() != 3 {
        return Err(EngineError::WrongDimension {
            expected: 3,
            found: cm.dim(),
        });
    }
    let (a, b, c) = (cm.column(0), cm.column(1), cm.column(2));
    let cross = [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ];
    let cross_sq = dot(&cross, &cross);
    if cross_sq == 0.0 {
        return Err(EngineError::OrderDeficient {
            t: cm.at_t,
            order: 1,
            required: 2,
        });
    }
    let speed = norm(&a);
    Ok((
        cross_sq.sqrt() / (speed * speed * speed),
        dot(&cross, &c) / cross_sq,
    ))
}

/// Curvatures `κ_1, ..., κ_{r-1}` of a curve whose order is exactly `r`
/// with `1 <= r <= n - 2`. All returned values use the positive branch.
pub fn curvatures_degenerate(
    cm: &CanonicalMatrix,
    gd: &GramData,
    order: usize,
) -> Result<CurvatureProfile, EngineError> {
    let n = cm.dim();
    if order == 0 || order + 2 > n {
        return Err(EngineError::InvalidOrder { order, dim: n });
    }
    if order == 1 {
        return Err(EngineError::OrderDeficient {
            t: cm.at_t,
            order,
            required: 2,
        });
    }
    let m = |i: usize| gd.minor(i);
    let speed = m(1).sqrt();
    let kappas = (1..order)
        .map(|i| (m(i + 1) * m(i - 1)).sqrt() / (speed * m(i)))
        .collect();
    Ok(CurvatureProfile {
        t: cm.at_t,
        kappas,
        order,
        method: Method::MinorFormula,
        degenerate: true,
        last_forced_zero: false,
    })
}

/// Maximal run of grid indices `start..=end` with constant order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrderSegment {
    pub start: usize,
    pub end: usize,
    pub order: usize,
}

impl OrderSegment {
    pub fn sample_count(&self) -> usize {
        self.end - self.start + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderSegmentation {
    pub grid: Vec<f64>,
    pub orders: Vec<usize>,
    pub segments: Vec<OrderSegment>,
}

impl OrderSegmentation {
    pub fn from_orders(grid: Vec<f64>, orders: Vec<usize>) -> Self {
        let mut segments: Vec<OrderSegment> = Vec::new();
        for (i, &order) in orders.iter().enumerate() {
            match segments.last_mut() {
                Some(seg) if seg.order == order => seg.end = i,
                _ => segments.push(OrderSegment {
                    start: i,
                    end: i,
                    order,
                }),
            }
        }
        OrderSegmentation {
            grid,
            orders,
            segments,
        }
    }

    /// A single-sample segment whose order is below both neighbors: a point
    /// of the closed set where the order drops, not an interval.
    pub fn is_boundary_point(&self, index: usize) -> bool {
        let Some(k) = self
            .segments
            .iter()
            .position(|s| s.start <= index && index <= s.end)
        else {
            return false;
        };
        let seg = self.segments[k];
        if seg.sample_count() != 1 || k == 0 || k + 1 == self.segments.len() {
            return false;
        }
        self.segments[k - 1].order > seg.order && self.segments[k + 1].order > seg.order
    }
}

/// Per-sample order detection followed by grouping into constant-order runs.
pub fn segment_by_order(
    spec: &CurveSpec,
    grid: &[f64],
    tol: f64,
) -> Result<OrderSegmentation, EngineError> {
    let orders = grid
        .iter()
        .map(|&t| canonical_matrix(spec, t).map(|cm| detect_order(&gram_data(&cm), tol)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(OrderSegmentation::from_orders(grid.to_vec(), orders))
}

/// Componentwise discrepancy between two curvature vectors, measured
/// relative to the larger of each pair and to the largest curvature in `b`.
/// Components that are near zero on the sample's natural scale are
/// therefore compared absolutely at that scale.
pub fn profile_delta(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let scale = b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let denom = x.abs().max(y.abs()).max(scale);
            if denom == 0.0 {
                0.0
            } else {
                (x - y).abs() / denom
            }
        })
        .fold(0.0, f64::max)
}
