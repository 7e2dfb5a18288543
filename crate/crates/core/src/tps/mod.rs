//! Thin-plate-spline fitting and evaluation.
//!
//! A transform maps the plane through an affine part plus weighted radial
//! kernels `U(r) = r^2 ln(r^2)` centered on control points. Fitting solves
//! the augmented linear system
//!
//! ```text
//! | K + lambda I   P | | w |   | v |
//! | P^T            0 | | a | = | 0 |
//! ```
//!
//! per output axis, where `K` holds pairwise kernel values, `P` rows are
//! `(1, u, v)`, and the zero block pins the side conditions `sum w = 0`,
//! `sum w u = 0`, `sum w v = 0` that kill the kernel field's affine leak.
//! With `lambda = 0` the fit interpolates its targets exactly; positive
//! `lambda` trades reproduction error for a smaller bending energy
//! `w^T K w`.
//!
//! Seeded keypoint sampling, jitter, and label-map warping live in [`warp`]
//! and are re-exported here.

mod warp;

pub use warp::{
    jitter_keypoints, sample_boundary_keypoints, warp_augment, warp_augment_full, warp_label_map,
    BorderMode, WarpConfig, WarpOutcome, WarpStats,
};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Spatial tolerance (pixels) below which control points count as coincident
/// or collinear.
const DEGENERACY_TOL: f64 = 1e-9;

/// An ordered set of 2-D keypoints; `u` is the column (x) coordinate and `v`
/// the row (y) coordinate, both in real pixels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct KeyPointSet {
    pub points: Vec<(f64, f64)>,
}

impl KeyPointSet {
    #[must_use]
    pub fn new(points: Vec<(f64, f64)>) -> Self {
        Self { points }
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Radial kernel on a squared distance: `U = d2 ln(d2)`, zero at the origin.
fn kernel_r2(d2: f64) -> f64 {
    if d2 > 0.0 {
        d2 * d2.ln()
    } else {
        0.0
    }
}

fn dist2(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (a.0 - b.0, a.1 - b.1);
    dx * dx + dy * dy
}

/// True when every point lies within `DEGENERACY_TOL` of one straight line
/// (coincident clouds count as collinear).
fn points_collinear(points: &[(f64, f64)]) -> bool {
    let p0 = points[0];
    // Anchor the line at the point farthest from p0 for conditioning.
    let (far, far_d2) = points
        .iter()
        .map(|&p| (p, dist2(p, p0)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("caller guarantees a non-empty set");
    if far_d2 < DEGENERACY_TOL * DEGENERACY_TOL {
        return true;
    }
    let len = far_d2.sqrt();
    points.iter().all(|&p| {
        let cross = (far.0 - p0.0) * (p.1 - p0.1) - (far.1 - p0.1) * (p.0 - p0.0);
        (cross / len).abs() < DEGENERACY_TOL
    })
}

/// A fitted thin-plate-spline map from the plane to the plane.
///
/// `affine` rows are `[coef_u, coef_v, constant]` for the two output axes;
/// `weights` pairs one `(wu, wv)` with each control point.
#[derive(Debug, Clone, PartialEq)]
pub struct TpsTransform {
    control_points: KeyPointSet,
    affine: [[f64; 3]; 2],
    weights: Vec<(f64, f64)>,
    regularization: f64,
}

impl TpsTransform {
    /// Fit a spline carrying `fixed` points onto `moving` targets.
    ///
    /// Requires at least three non-collinear fixed points and equally long
    /// point lists. With `lambda_reg = 0` the fit interpolates exactly;
    /// duplicate fixed points are only solvable with `lambda_reg > 0`.
    pub fn fit(fixed: &KeyPointSet, moving: &KeyPointSet, lambda_reg: f64) -> Result<Self> {
        if fixed.len() != moving.len() {
            return Err(Error::KeyPointCountMismatch {
                fixed: fixed.len(),
                moving: moving.len(),
            });
        }
        if fixed.len() < 3 {
            return Err(Error::DegenerateControlPoints(format!(
                "need at least 3 control points, got {}",
                fixed.len()
            )));
        }
        if !lambda_reg.is_finite() || lambda_reg < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "regularization must be finite and non-negative, got {lambda_reg}"
            )));
        }
        let pts = &fixed.points;
        if points_collinear(pts) {
            return Err(Error::DegenerateControlPoints(
                "fixed points are collinear or coincident".into(),
            ));
        }

        let n = pts.len();
        let mut l = DMatrix::<f64>::zeros(n + 3, n + 3);
        for i in 0..n {
            for j in 0..n {
                l[(i, j)] = kernel_r2(dist2(pts[i], pts[j]));
            }
            l[(i, i)] += lambda_reg;
            l[(i, n)] = 1.0;
            l[(i, n + 1)] = pts[i].0;
            l[(i, n + 2)] = pts[i].1;
            l[(n, i)] = 1.0;
            l[(n + 1, i)] = pts[i].0;
            l[(n + 2, i)] = pts[i].1;
        }
        let mut rhs = DMatrix::<f64>::zeros(n + 3, 2);
        for (i, &(mu, mv)) in moving.points.iter().enumerate() {
            rhs[(i, 0)] = mu;
            rhs[(i, 1)] = mv;
        }

        let solution = l
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::DegenerateControlPoints("singular spline system".into()))?;
        if solution.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateControlPoints(
                "spline system solved to non-finite coefficients".into(),
            ));
        }

        let weights = (0..n)
            .map(|i| (solution[(i, 0)], solution[(i, 1)]))
            .collect();
        let affine = [
            [solution[(n + 1, 0)], solution[(n + 2, 0)], solution[(n, 0)]],
            [solution[(n + 1, 1)], solution[(n + 2, 1)], solution[(n, 1)]],
        ];
        Ok(Self {
            control_points: fixed.clone(),
            affine,
            weights,
            regularization: lambda_reg,
        })
    }

    /// Assemble a transform from raw parts, checking only structural shape.
    pub fn from_parts(
        control_points: KeyPointSet,
        affine: [[f64; 3]; 2],
        weights: Vec<(f64, f64)>,
        regularization: f64,
    ) -> Result<Self> {
        if control_points.len() != weights.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} control points but {} weight pairs",
                control_points.len(),
                weights.len()
            )));
        }
        Ok(Self {
            control_points,
            affine,
            weights,
            regularization,
        })
    }

    /// The identity map (no control points, unit affine part).
    #[must_use]
    pub fn identity() -> Self {
        Self::translation(0.0, 0.0)
    }

    /// A pure translation by `(du, dv)`.
    #[must_use]
    pub fn translation(du: f64, dv: f64) -> Self {
        Self {
            control_points: KeyPointSet::default(),
            affine: [[1.0, 0.0, du], [0.0, 1.0, dv]],
            weights: Vec::new(),
            regularization: 0.0,
        }
    }

    /// Map one point through the transform.
    #[must_use]
    pub fn apply(&self, p: (f64, f64)) -> (f64, f64) {
        let (u, v) = p;
        let mut out = (
            self.affine[0][0] * u + self.affine[0][1] * v + self.affine[0][2],
            self.affine[1][0] * u + self.affine[1][1] * v + self.affine[1][2],
        );
        for (&c, &(wu, wv)) in self.control_points.points.iter().zip(&self.weights) {
            let k = kernel_r2(dist2(p, c));
            out.0 += wu * k;
            out.1 += wv * k;
        }
        out
    }

    /// Kernel-part curvature `w^T K w`, summed over both output axes.
    ///
    /// Zero (to rounding) for affine maps; non-negative whenever the side
    /// conditions hold.
    #[must_use]
    pub fn bending_energy(&self) -> f64 {
        let pts = &self.control_points.points;
        let mut total = 0.0;
        for (i, &pi) in pts.iter().enumerate() {
            for (j, &pj) in pts.iter().enumerate() {
                let k = kernel_r2(dist2(pi, pj));
                total += k
                    * (self.weights[i].0 * self.weights[j].0
                        + self.weights[i].1 * self.weights[j].1);
            }
        }
        total
    }

    #[must_use]
    pub fn control_points(&self) -> &KeyPointSet {
        &self.control_points
    }

    /// Affine rows `[coef_u, coef_v, constant]` per output axis.
    #[must_use]
    pub fn affine(&self) -> &[[f64; 3]; 2] {
        &self.affine
    }

    /// One `(wu, wv)` kernel weight pair per control point.
    #[must_use]
    pub fn weights(&self) -> &[(f64, f64)] {
        &self.weights
    }

    #[must_use]
    pub fn regularization(&self) -> f64 {
        self.regularization
    }
}
