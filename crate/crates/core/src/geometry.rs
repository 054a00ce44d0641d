//! Convex body oracles: membership, chord intersection, diameter bounds.
//!
//! A body is held as an exact oracle rather than a mesh: samplers and
//! quadrature only ever need to (a) test membership and (b) intersect a line
//! with the body. Closed forms cover balls, boxes, simplices, H-polytopes
//! and ellipsoids; opaque membership-only bodies fall back to bisection.
//! All bodies are validated at construction: unbounded or dimension-deficient
//! inputs are rejected, never clipped.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("invalid body: {0}")]
    Invalid(String),
    #[error("body is unbounded along {0}")]
    Unbounded(String),
    #[error("body is degenerate (no interior volume): {0}")]
    Degenerate(String),
    #[error("point is not interior to the body")]
    NotInterior,
}

pub type Result<T> = std::result::Result<T, GeometryError>;

/// Fraction of `tol_chord` used as membership slack so that chord endpoints
/// themselves test as inside the closure.
const MEMBERSHIP_SLACK: f64 = 0.5;

/// Bisection iteration cap for membership-only chord resolution.
const BISECTION_MAX_ITER: usize = 200;

// Small dense-vector helpers shared across the crate.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `p + t * u`
pub(crate) fn point_on_line(p: &[f64], u: &[f64], t: f64) -> Vec<f64> {
    p.iter().zip(u).map(|(x, d)| x + t * d).collect()
}

/// Natural log of the volume of the n-dimensional unit ball.
pub fn log_unit_ball_volume(n: usize) -> f64 {
    // V_0 = 1, V_1 = 2, V_n = V_{n-2} * 2π / n
    let mut log_v = if n % 2 == 0 { 0.0 } else { std::f64::consts::LN_2 };
    let mut k = if n % 2 == 0 { 2 } else { 3 };
    while k <= n {
        log_v += (2.0 * std::f64::consts::PI / k as f64).ln();
        k += 2;
    }
    log_v
}

/// Geometric payload of a convex body.
#[derive(Clone)]
pub enum ShapeKind {
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    Simplex {
        vertices: Vec<Vec<f64>>,
        /// Facet halfspaces ⟨rows[i], x⟩ ≤ offsets[i], derived at construction.
        rows: Vec<Vec<f64>>,
        offsets: Vec<f64>,
    },
    HPolytope {
        rows: Vec<Vec<f64>>,
        offsets: Vec<f64>,
        /// Optional vertex list; enables an exact diameter.
        vertices: Option<Vec<Vec<f64>>>,
    },
    Ellipsoid {
        /// SPD shape matrix M: x ∈ K iff (x-c)ᵀ M (x-c) ≤ 1.
        shape: Vec<Vec<f64>>,
        center: Vec<f64>,
    },
    Translated {
        inner: Box<ConvexBody>,
        shift: Vec<f64>,
    },
    /// Membership-only oracle; chords are resolved by bisection.
    Opaque {
        membership: Arc<dyn Fn(&[f64]) -> bool + Send + Sync>,
        label: String,
    },
}

impl fmt::Debug for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShapeKind::Ball { center, radius } => f
                .debug_struct("Ball")
                .field("center", center)
                .field("radius", radius)
                .finish(),
            ShapeKind::Box { lower, upper } => f
                .debug_struct("Box")
                .field("lower", lower)
                .field("upper", upper)
                .finish(),
            ShapeKind::Simplex { vertices, .. } => {
                f.debug_struct("Simplex").field("vertices", vertices).finish()
            }
            ShapeKind::HPolytope { rows, .. } => {
                f.debug_struct("HPolytope").field("rows", &rows.len()).finish()
            }
            ShapeKind::Ellipsoid { center, .. } => {
                f.debug_struct("Ellipsoid").field("center", center).finish()
            }
            ShapeKind::Translated { inner, shift } => f
                .debug_struct("Translated")
                .field("inner", inner)
                .field("shift", shift)
                .finish(),
            ShapeKind::Opaque { label, .. } => {
                f.debug_struct("Opaque").field("label", label).finish()
            }
        }
    }
}

/// A bounded convex body with exact sampling/quadrature oracles.
///
/// Immutable after construction; safe to share across concurrent samplers.
#[derive(Clone, Debug)]
pub struct ConvexBody {
    dimension: usize,
    interior_point: Vec<f64>,
    bounding_radius: f64,
    tol_chord: f64,
    kind: ShapeKind,
}

impl ConvexBody {
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(GeometryError::Invalid("ball radius must be positive".into()));
        }
        let body = Self::assemble(
            center.len(),
            center.clone(),
            radius,
            ShapeKind::Ball { center, radius },
        )?;
        Ok(body)
    }

    pub fn cuboid(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(GeometryError::Invalid("box corner dimensions mismatch".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite()) {
            return Err(GeometryError::Degenerate(
                "box needs lower < upper in every coordinate".into(),
            ));
        }
        let center: Vec<f64> = lower.iter().zip(&upper).map(|(l, u)| 0.5 * (l + u)).collect();
        let radius = lower
            .iter()
            .zip(&upper)
            .map(|(l, u)| (0.5 * (u - l)).powi(2))
            .sum::<f64>()
            .sqrt();
        Self::assemble(lower.len(), center, radius, ShapeKind::Box { lower, upper })
    }

    pub fn simplex(vertices: Vec<Vec<f64>>) -> Result<Self> {
        let n = vertices
            .first()
            .map(|v| v.len())
            .ok_or_else(|| GeometryError::Invalid("simplex needs vertices".into()))?;
        if vertices.len() != n + 1 || vertices.iter().any(|v| v.len() != n) {
            return Err(GeometryError::Invalid(format!(
                "simplex in dimension {n} needs exactly {} vertices",
                n + 1
            )));
        }
        // Barycentric coordinates are affine in x: λ_i(x) = c_i + ⟨g_i, x⟩.
        // Each facet inequality λ_i(x) ≥ 0 becomes the halfspace ⟨-g_i, x⟩ ≤ c_i.
        let v0 = &vertices[0];
        let mut edge = nalgebra::DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            for i in 0..n {
                edge[(i, j)] = vertices[j + 1][i] - v0[i];
            }
        }
        let inv = edge.clone().try_inverse().ok_or_else(|| {
            GeometryError::Degenerate("simplex vertices are affinely dependent".into())
        })?;
        let mut rows = Vec::with_capacity(n + 1);
        let mut offsets = Vec::with_capacity(n + 1);
        // λ_{i+1}(x) = row_i(inv) · (x - v0) for i = 0..n
        let mut grad_sum = vec![0.0; n];
        for i in 0..n {
            let g: Vec<f64> = (0..n).map(|j| inv[(i, j)]).collect();
            for (s, gj) in grad_sum.iter_mut().zip(&g) {
                *s += gj;
            }
            let c = -dot(&g, v0);
            rows.push(g.iter().map(|x| -x).collect());
            offsets.push(c);
        }
        // λ_0 = 1 - Σ_{i≥1} λ_i ≥ 0  ⇔  ⟨grad_sum, x⟩ ≤ 1 + ⟨grad_sum, v0⟩
        let offset0 = 1.0 + dot(&grad_sum, v0);
        rows.push(grad_sum);
        offsets.push(offset0);
        // Centroid is strictly interior for a nondegenerate simplex.
        let centroid: Vec<f64> = (0..n)
            .map(|i| vertices.iter().map(|v| v[i]).sum::<f64>() / (n + 1) as f64)
            .collect();
        let radius = vertices
            .iter()
            .map(|v| norm(&sub(v, &centroid)))
            .fold(0.0f64, f64::max);
        Self::assemble(
            n,
            centroid,
            radius,
            ShapeKind::Simplex {
                vertices,
                rows,
                offsets,
            },
        )
    }

    pub fn hpolytope(
        rows: Vec<Vec<f64>>,
        offsets: Vec<f64>,
        interior_point: Vec<f64>,
        bounding_radius: f64,
        vertices: Option<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let n = interior_point.len();
        if rows.len() != offsets.len() || rows.is_empty() {
            return Err(GeometryError::Invalid("row/offset count mismatch".into()));
        }
        if rows.iter().any(|r| r.len() != n) {
            return Err(GeometryError::Invalid("row dimension mismatch".into()));
        }
        if !(bounding_radius.is_finite() && bounding_radius > 0.0) {
            return Err(GeometryError::Invalid("bounding radius must be positive".into()));
        }
        if let Some(vs) = &vertices {
            if vs.iter().any(|v| v.len() != n) {
                return Err(GeometryError::Invalid("vertex dimension mismatch".into()));
            }
        }
        Self::assemble(
            n,
            interior_point,
            bounding_radius,
            ShapeKind::HPolytope {
                rows,
                offsets,
                vertices,
            },
        )
    }

    pub fn ellipsoid(shape: Vec<Vec<f64>>, center: Vec<f64>) -> Result<Self> {
        let n = center.len();
        if shape.len() != n || shape.iter().any(|r| r.len() != n) {
            return Err(GeometryError::Invalid("shape matrix dimension mismatch".into()));
        }
        let m = nalgebra::DMatrix::from_fn(n, n, |i, j| shape[i][j]);
        if (&m - m.transpose()).amax() > 1e-10 * m.amax().max(1.0) {
            return Err(GeometryError::Invalid("shape matrix must be symmetric".into()));
        }
        if nalgebra::Cholesky::new(m.clone()).is_none() {
            return Err(GeometryError::Degenerate(
                "shape matrix must be positive definite".into(),
            ));
        }
        // Semi-axes are 1/sqrt(eigenvalues); bounding radius from the smallest one.
        let min_eig = m
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if !(min_eig > 0.0) {
            return Err(GeometryError::Degenerate("shape matrix must be positive definite".into()));
        }
        let radius = (1.0 / min_eig).sqrt();
        Self::assemble(n, center.clone(), radius, ShapeKind::Ellipsoid { shape, center })
    }

    pub fn translated(inner: ConvexBody, shift: Vec<f64>) -> Result<Self> {
        if shift.len() != inner.dimension {
            return Err(GeometryError::Invalid("shift dimension mismatch".into()));
        }
        let interior = inner
            .interior_point
            .iter()
            .zip(&shift)
            .map(|(x, s)| x + s)
            .collect();
        let radius = inner.bounding_radius;
        let n = inner.dimension;
        Self::assemble(
            n,
            interior,
            radius,
            ShapeKind::Translated {
                inner: Box::new(inner),
                shift,
            },
        )
    }

    /// Membership-only body; chords are resolved by bisection against the oracle.
    pub fn opaque(
        membership: Arc<dyn Fn(&[f64]) -> bool + Send + Sync>,
        interior_point: Vec<f64>,
        bounding_radius: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        let n = interior_point.len();
        if !(bounding_radius.is_finite() && bounding_radius > 0.0) {
            return Err(GeometryError::Invalid("bounding radius must be positive".into()));
        }
        Self::assemble(
            n,
            interior_point,
            bounding_radius,
            ShapeKind::Opaque {
                membership,
                label: label.into(),
            },
        )
    }

    fn assemble(
        dimension: usize,
        interior_point: Vec<f64>,
        bounding_radius: f64,
        kind: ShapeKind,
    ) -> Result<Self> {
        if dimension == 0 {
            return Err(GeometryError::Invalid("dimension must be positive".into()));
        }
        if interior_point.iter().any(|x| !x.is_finite()) {
            return Err(GeometryError::Invalid("interior point must be finite".into()));
        }
        let body = ConvexBody {
            dimension,
            interior_point,
            bounding_radius,
            tol_chord: 1e-10 * bounding_radius,
            kind,
        };
        body.validate()?;
        Ok(body)
    }

    /// Construction-time checks: strict interior point, boundedness along the
    /// coordinate directions, and a positive-volume witness (n+1 affinely
    /// independent interior probes built from the coordinate chords).
    fn validate(&self) -> Result<()> {
        if !self.membership(&self.interior_point) {
            return Err(GeometryError::Invalid(
                "interior point fails the membership oracle".into(),
            ));
        }
        let n = self.dimension;
        for i in 0..n {
            let mut u = vec![0.0; n];
            u[i] = 1.0;
            let (lo, hi) = self.chord_raw(&self.interior_point, &u)?;
            if !lo.is_finite() || !hi.is_finite() {
                return Err(GeometryError::Unbounded(format!("coordinate direction {i}")));
            }
            if hi - lo <= 4.0 * self.tol_chord {
                return Err(GeometryError::Degenerate(format!(
                    "chord along coordinate {i} has no interior width"
                )));
            }
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn interior_point(&self) -> &[f64] {
        &self.interior_point
    }

    pub fn bounding_radius(&self) -> f64 {
        self.bounding_radius
    }

    pub fn tol_chord(&self) -> f64 {
        self.tol_chord
    }

    pub fn kind(&self) -> &ShapeKind {
        &self.kind
    }

    /// True iff `x` lies in the closure of the body.
    pub fn membership(&self, x: &[f64]) -> bool {
        if x.len() != self.dimension || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        let slack = MEMBERSHIP_SLACK * self.tol_chord;
        match &self.kind {
            ShapeKind::Ball { center, radius } => {
                norm_sq(&sub(x, center)) <= (radius + slack) * (radius + slack)
            }
            ShapeKind::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(v, (l, u))| *v >= l - slack && *v <= u + slack),
            ShapeKind::Simplex { rows, offsets, .. }
            | ShapeKind::HPolytope { rows, offsets, .. } => rows
                .iter()
                .zip(offsets)
                .all(|(a, b)| dot(a, x) <= b + slack * (1.0 + norm(a))),
            ShapeKind::Ellipsoid { shape, center } => {
                let d = sub(x, center);
                quadratic_form(shape, &d) <= 1.0 + slack
            }
            ShapeKind::Translated { inner, shift } => inner.membership(&sub(x, shift)),
            ShapeKind::Opaque { membership, .. } => membership(x),
        }
    }

    /// The chord `{t : p + t·u ∈ K} = [t_lo, t_hi]` through interior point `p`
    /// along unit direction `u`, with `t_lo < 0 < t_hi`.
    pub fn chord_interval(&self, p: &[f64], u: &[f64]) -> Result<(f64, f64)> {
        if !self.membership(p) {
            return Err(GeometryError::NotInterior);
        }
        let (lo, hi) = self.chord_raw(p, u)?;
        if !lo.is_finite() || !hi.is_finite() {
            return Err(GeometryError::Unbounded("chord direction".into()));
        }
        Ok((lo, hi))
    }

    fn chord_raw(&self, p: &[f64], u: &[f64]) -> Result<(f64, f64)> {
        match &self.kind {
            ShapeKind::Ball { center, radius } => {
                let d = sub(p, center);
                Ok(quadratic_chord(1.0, dot(&d, u), norm_sq(&d) - radius * radius))
            }
            ShapeKind::Box { lower, upper } => {
                let mut lo = f64::NEG_INFINITY;
                let mut hi = f64::INFINITY;
                for i in 0..p.len() {
                    if u[i].abs() < 1e-300 {
                        continue;
                    }
                    let t1 = (lower[i] - p[i]) / u[i];
                    let t2 = (upper[i] - p[i]) / u[i];
                    lo = lo.max(t1.min(t2));
                    hi = hi.min(t1.max(t2));
                }
                Ok((lo, hi))
            }
            ShapeKind::Simplex { rows, offsets, .. }
            | ShapeKind::HPolytope { rows, offsets, .. } => {
                let mut lo = f64::NEG_INFINITY;
                let mut hi = f64::INFINITY;
                for (a, b) in rows.iter().zip(offsets) {
                    let slope = dot(a, u);
                    let margin = b - dot(a, p);
                    if slope.abs() < 1e-14 * norm(a) {
                        continue;
                    }
                    let t = margin / slope;
                    if slope > 0.0 {
                        hi = hi.min(t);
                    } else {
                        lo = lo.max(t);
                    }
                }
                Ok((lo, hi))
            }
            ShapeKind::Ellipsoid { shape, center } => {
                let d = sub(p, center);
                let mu = mat_vec(shape, u);
                let a = dot(u, &mu);
                let b = dot(&d, &mu);
                let c = quadratic_form(shape, &d) - 1.0;
                Ok(quadratic_chord(a, b, c))
            }
            ShapeKind::Translated { inner, shift } => inner.chord_raw(&sub(p, shift), u),
            ShapeKind::Opaque { membership, .. } => {
                let reach = norm(&sub(p, &self.interior_point)) + self.bounding_radius;
                let hi = bisect_boundary(membership.as_ref(), p, u, reach, self.tol_chord);
                let neg: Vec<f64> = u.iter().map(|x| -x).collect();
                let lo = -bisect_boundary(membership.as_ref(), p, &neg, reach, self.tol_chord);
                Ok((lo, hi))
            }
        }
    }

    /// Certified upper bound on the diameter; exact where the shape allows.
    pub fn diameter_upper_bound(&self) -> f64 {
        match &self.kind {
            ShapeKind::Ball { radius, .. } => 2.0 * radius,
            ShapeKind::Box { lower, upper } => norm(&sub(upper, lower)),
            ShapeKind::Simplex { vertices, .. } => max_pairwise_distance(vertices),
            ShapeKind::HPolytope { vertices, .. } => match vertices {
                Some(vs) if vs.len() >= 2 => max_pairwise_distance(vs),
                _ => 2.0 * self.bounding_radius,
            },
            ShapeKind::Ellipsoid { .. } => 2.0 * self.bounding_radius,
            ShapeKind::Translated { inner, .. } => inner.diameter_upper_bound(),
            ShapeKind::Opaque { .. } => 2.0 * self.bounding_radius,
        }
    }

    /// Natural log of the exact volume, when the shape admits one.
    pub fn log_volume(&self) -> Option<f64> {
        match &self.kind {
            ShapeKind::Ball { radius, .. } => {
                Some(log_unit_ball_volume(self.dimension) + self.dimension as f64 * radius.ln())
            }
            ShapeKind::Box { lower, upper } => {
                Some(lower.iter().zip(upper).map(|(l, u)| (u - l).ln()).sum())
            }
            ShapeKind::Simplex { vertices, .. } => {
                let n = self.dimension;
                let v0 = &vertices[0];
                let m = nalgebra::DMatrix::from_fn(n, n, |i, j| vertices[j + 1][i] - v0[i]);
                let det = m.determinant().abs();
                let log_factorial: f64 = (1..=n).map(|k| (k as f64).ln()).sum();
                Some(det.ln() - log_factorial)
            }
            ShapeKind::Ellipsoid { shape, .. } => {
                let n = self.dimension;
                let m = nalgebra::DMatrix::from_fn(n, n, |i, j| shape[i][j]);
                let det = m.determinant();
                Some(log_unit_ball_volume(n) - 0.5 * det.ln())
            }
            ShapeKind::Translated { inner, .. } => inner.log_volume(),
            ShapeKind::HPolytope { .. } | ShapeKind::Opaque { .. } => None,
        }
    }

    /// The body shifted so that `x0` becomes the origin.
    pub fn translate_to_origin(&self, x0: &[f64]) -> ConvexBody {
        let neg: Vec<f64> = x0.iter().map(|x| -x).collect();
        match &self.kind {
            // Collapse nested translations.
            ShapeKind::Translated { inner, shift } => {
                let combined: Vec<f64> = shift.iter().zip(&neg).map(|(a, b)| a + b).collect();
                ConvexBody::translated((**inner).clone(), combined)
                    .expect("translating a valid body stays valid")
            }
            _ => ConvexBody::translated(self.clone(), neg)
                .expect("translating a valid body stays valid"),
        }
    }
}

fn quadratic_form(m: &[Vec<f64>], d: &[f64]) -> f64 {
    dot(d, &mat_vec(m, d))
}

fn mat_vec(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, x)).collect()
}

/// Roots of a t² + 2 b t + c = 0 ordered as (t_lo, t_hi), for a > 0, c < 0.
fn quadratic_chord(a: f64, b: f64, c: f64) -> (f64, f64) {
    let disc = (b * b - a * c).max(0.0).sqrt();
    ((-b - disc) / a, (-b + disc) / a)
}

/// Distance along `u` from interior `p` to the boundary, resolved by
/// bisection against the membership oracle. Returns the inside endpoint, so
/// emitted chord points always pass membership.
fn bisect_boundary<F: Fn(&[f64]) -> bool + ?Sized>(
    membership: &F,
    p: &[f64],
    u: &[f64],
    reach: f64,
    tol: f64,
) -> f64 {
    let mut t_in = 0.0;
    let mut t_out = reach * (1.0 + 1e-6) + tol;
    if membership(&point_on_line(p, u, t_out)) {
        // Oracle disagrees with the declared bounding radius; treat the
        // declared reach as the boundary.
        return t_out;
    }
    for _ in 0..BISECTION_MAX_ITER {
        if t_out - t_in <= tol {
            break;
        }
        let mid = 0.5 * (t_in + t_out);
        if membership(&point_on_line(p, u, mid)) {
            t_in = mid;
        } else {
            t_out = mid;
        }
    }
    t_in
}

fn max_pairwise_distance(points: &[Vec<f64>]) -> f64 {
    let mut best = 0.0f64;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            best = best.max(norm(&sub(&points[i], &points[j])));
        }
    }
    best
}
