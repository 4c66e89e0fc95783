//! Frenet frames and generalized curvatures of curves in Rⁿ.
//!
//! Curves are written in a small expression language ([`dsl`]), differentiated
//! exactly with truncated Taylor arithmetic ([`jet`]), and analyzed through the
//! Gram matrix of their derivatives ([`frenet`]). The [`oracle`] module holds
//! slower reference computations used for cross-checking.
//!
//! ```
//! use frenet_kit::{canonical_matrix, curvatures_minor, gram_data, parse_curve, DEFAULT_ORDER_TOL};
//!
//! let spec = parse_curve("[t, t^2, t^3, t^4]")?;
//! let cm = canonical_matrix(&spec, 0.0)?;
//! let profile = curvatures_minor(&cm, &gram_data(&cm), DEFAULT_ORDER_TOL)?;
//! assert_eq!(profile.kappas, vec![2.0, 3.0, 4.0]);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dsl;
pub mod frenet;
pub mod jet;
pub mod linalg;
pub mod oracle;

pub use dsl::{parse_curve, parse_expr, CurveSpec, DslError, EvalError, Expr, ParseError};
pub use frenet::{
    canonical_matrix, curvatures_degenerate, curvatures_minor, curvatures_qr, detect_order,
    frenet_frame, gram_data, segment_by_order, CanonicalMatrix, CurvatureProfile, EngineConfig,
    EngineError, FrenetFrame, GramData, Method, OrderSegmentation, DEFAULT_ORDER_TOL,
};
pub use jet::{Jet, JetError};
pub use linalg::{generalized_cross, MatN};
