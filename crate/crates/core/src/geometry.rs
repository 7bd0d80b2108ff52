//! Linear algebra on Grassmannians: projection matrices, their distances,
//! operator norms, and the volume of the unit ball.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimension above which the operator norm falls back to power iteration.
const SVD_MAX_DIM: usize = 8;

/// Volume of the unit ball in R^n, `pi^(n/2) / Gamma(n/2 + 1)`.
pub fn unit_ball_volume(n: usize) -> f64 {
    let half = n as f64 / 2.0;
    std::f64::consts::PI.powf(half) / statrs::function::gamma::gamma(half + 1.0)
}

/// Euclidean operator norm (largest singular value).
pub fn operator_norm(a: &DMatrix<f64>) -> f64 {
    if a.nrows().max(a.ncols()) <= SVD_MAX_DIM {
        a.singular_values().iter().cloned().fold(0.0, f64::max)
    } else {
        power_iteration_norm(a, 50, 1e-12)
    }
}

fn power_iteration_norm(a: &DMatrix<f64>, iters: usize, tol: f64) -> f64 {
    let ata = a.transpose() * a;
    let dim = ata.nrows();
    if dim == 0 {
        return 0.0;
    }
    // fixed, non-degenerate start vector keeps the result deterministic
    let mut v = DVector::from_fn(dim, |i, _| 1.0 + 0.1 * i as f64);
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..iters {
        let w = &ata * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = v.dot(&w);
        v = w / norm;
        if (next - lambda).abs() <= tol * next.abs().max(1.0) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda.max(0.0).sqrt()
}

/// Orthonormalize the columns of `m` by modified Gram-Schmidt.
///
/// Returns `None` when the columns are (numerically) linearly dependent.
pub fn orthonormalize_columns(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let mut q = m.clone();
    for j in 0..q.ncols() {
        for i in 0..j {
            let proj = q.column(i).dot(&q.column(j));
            let qi = q.column(i).clone_owned();
            let mut cj = q.column_mut(j);
            cj.axpy(-proj, &qi, 1.0);
        }
        let norm = q.column(j).norm();
        if norm < 1e-14 {
            return None;
        }
        q.column_mut(j).unscale_mut(norm);
    }
    Some(q)
}

/// Orthogonal projection onto an n-plane of R^(n+k) together with its complement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionPair {
    #[serde(with = "matrix_rows")]
    pub tangent: DMatrix<f64>,
    #[serde(with = "matrix_rows")]
    pub complement: DMatrix<f64>,
}

/// Serializes a matrix as a list of rows.
pub mod matrix_rows {
    use nalgebra::DMatrix;
    use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

    pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
        m.row_iter().map(|r| r.iter().cloned().collect()).collect()
    }

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(D::Error::custom("ragged matrix rows"));
        }
        Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
    }
}

/// Both matrix norms of a difference of projections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionDistance {
    pub operator: f64,
    pub frobenius: f64,
}

impl ProjectionPair {
    /// Projection onto the span of the columns of an orthonormal `frame`.
    pub fn from_frame(frame: &DMatrix<f64>) -> Self {
        let tangent = frame * frame.transpose();
        let complement = DMatrix::identity(tangent.nrows(), tangent.ncols()) - &tangent;
        Self { tangent, complement }
    }

    /// Projection onto the span of arbitrary independent columns.
    pub fn from_spanning(columns: &DMatrix<f64>) -> Result<Self> {
        let frame = orthonormalize_columns(columns).ok_or_else(|| Error::InvalidInput("plane spanning vectors are dependent".into()))?;
        Ok(Self::from_frame(&frame))
    }

    /// The coordinate plane spanned by the first `n` axes of R^(n+k).
    pub fn coordinate(n: usize, k: usize) -> Self {
        let d = n + k;
        let tangent = DMatrix::from_fn(d, d, |i, j| if i == j && i < n { 1.0 } else { 0.0 });
        let complement = DMatrix::identity(d, d) - &tangent;
        Self { tangent, complement }
    }

    /// Nearest rank-`n` orthogonal projection to a symmetric matrix: the
    /// projection onto its top-`n` eigenspace.
    pub fn top_eigenspace(sym: &DMatrix<f64>, n: usize) -> Result<Self> {
        let d = sym.nrows();
        if sym.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: sym.ncols() });
        }
        if n > d {
            return Err(Error::InvalidInput(format!("rank {n} exceeds dimension {d}")));
        }
        let eig = SymmetricEigen::new(sym.clone());
        let mut order: Vec<usize> = (0..d).collect();
        // ties broken by index so the result is deterministic
        order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
        let frame = DMatrix::from_fn(d, n, |i, j| eig.eigenvectors[(i, order[j])]);
        Ok(Self::from_frame(&frame))
    }

    pub fn ambient_dim(&self) -> usize {
        self.tangent.nrows()
    }

    /// Orthonormal basis of the plane (columns).
    pub fn basis(&self, n: usize) -> DMatrix<f64> {
        top_basis(&self.tangent, n)
    }

    /// Orthonormal basis of the orthogonal complement (columns).
    pub fn normal_basis(&self, k: usize) -> DMatrix<f64> {
        top_basis(&self.complement, k)
    }

    /// Deviation from symmetric idempotence and the trace.
    pub fn defects(&self) -> (f64, f64, f64) {
        let p = &self.tangent;
        let idem = (p * p - p).amax();
        let sym = (p - p.transpose()).amax();
        (idem, sym, p.trace())
    }

    pub fn distance(&self, other: &ProjectionPair) -> Result<ProjectionDistance> {
        projection_distance(self, other)
    }
}

fn top_basis(p: &DMatrix<f64>, m: usize) -> DMatrix<f64> {
    let d = p.nrows();
    let eig = SymmetricEigen::new(p.clone());
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    DMatrix::from_fn(d, m, |i, j| eig.eigenvectors[(i, order[j])])
}

/// Operator and Frobenius norms of `P_a - P_b`; the squared Frobenius norm is
/// `tr((P_a - P_b)^2)`.
pub fn projection_distance(a: &ProjectionPair, b: &ProjectionPair) -> Result<ProjectionDistance> {
    let (da, db) = (a.ambient_dim(), b.ambient_dim());
    if da != db {
        return Err(Error::DimensionMismatch { expected: da, got: db });
    }
    let diff = &a.tangent - &b.tangent;
    Ok(ProjectionDistance { operator: symmetric_operator_norm(&diff), frobenius: frobenius_sq(&diff).sqrt() })
}

/// `tr(D^2)` for symmetric `D`, i.e. the squared Frobenius norm.
pub fn frobenius_sq(diff: &DMatrix<f64>) -> f64 {
    diff.iter().map(|x| x * x).sum()
}

/// Largest absolute eigenvalue of a symmetric matrix.
pub fn symmetric_operator_norm(sym: &DMatrix<f64>) -> f64 {
    if sym.nrows() == 0 {
        return 0.0;
    }
    if sym.nrows() <= SVD_MAX_DIM {
        SymmetricEigen::new(sym.clone()).eigenvalues.iter().fold(0.0_f64, |m, e| m.max(e.abs()))
    } else {
        operator_norm(sym)
    }
}

/// Rotation of R^d by `angle` in the plane of axes `i` and `j`.
pub fn plane_rotation(d: usize, i: usize, j: usize, angle: f64) -> DMatrix<f64> {
    let mut r = DMatrix::identity(d, d);
    let (s, c) = angle.sin_cos();
    r[(i, i)] = c;
    r[(j, j)] = c;
    r[(i, j)] = -s;
    r[(j, i)] = s;
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn line(angle: f64) -> ProjectionPair {
        ProjectionPair::from_frame(&DMatrix::from_column_slice(2, 1, &[angle.cos(), angle.sin()]))
    }

    #[test]
    fn unit_ball_volumes() {
        assert_abs_diff_eq!(unit_ball_volume(1), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(unit_ball_volume(2), std::f64::consts::PI, epsilon = 1e-14);
        assert_abs_diff_eq!(unit_ball_volume(3), 4.0 * std::f64::consts::PI / 3.0, epsilon = 1e-13);
    }

    #[test]
    fn identical_planes_are_at_distance_zero() {
        let p = line(0.3);
        let d = projection_distance(&p, &p).unwrap();
        assert_eq!(d.operator, 0.0);
        assert_eq!(d.frobenius, 0.0);
    }

    #[test]
    fn lines_at_an_angle() {
        for phi in [0.1_f64, 0.7, 1.2, 2.5] {
            // oracle: explicit 2x2 projections from rotation matrices
            let (c, s) = (phi.cos(), phi.sin());
            let pa = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
            let pb = DMatrix::from_row_slice(2, 2, &[c * c, c * s, c * s, s * s]);
            let diff = &pa - &pb;
            let fro_oracle = diff.iter().map(|x| x * x).sum::<f64>().sqrt();
            let d = projection_distance(&line(0.0), &line(phi)).unwrap();
            assert_abs_diff_eq!(d.frobenius, fro_oracle, epsilon = 1e-12);
            assert_abs_diff_eq!(d.frobenius, 2f64.sqrt() * s.abs(), epsilon = 1e-12);
            assert_abs_diff_eq!(d.operator, s.abs(), epsilon = 1e-12);
        }
    }

    #[test]
    fn plane_rotated_by_right_angle_has_operator_distance_one() {
        let p = ProjectionPair::coordinate(2, 1);
        let r = plane_rotation(3, 1, 2, std::f64::consts::FRAC_PI_2);
        let rotated = ProjectionPair { tangent: &r * &p.tangent * r.transpose(), complement: &r * &p.complement * r.transpose() };
        let d = projection_distance(&p, &rotated).unwrap();
        assert_abs_diff_eq!(d.operator, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.frobenius, 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = ProjectionPair::coordinate(1, 1);
        let b = ProjectionPair::coordinate(2, 1);
        assert!(matches!(projection_distance(&a, &b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn top_eigenspace_of_a_projection_is_itself() {
        let p = ProjectionPair::from_spanning(&DMatrix::from_column_slice(3, 2, &[1.0, 0.2, 0.1, 0.0, 1.0, -0.4])).unwrap();
        let q = ProjectionPair::top_eigenspace(&p.tangent, 2).unwrap();
        assert!((&p.tangent - &q.tangent).amax() < 1e-12);
        let (idem, sym, tr) = q.defects();
        assert!(idem < 1e-10 && sym < 1e-12);
        assert_abs_diff_eq!(tr, 2.0, epsilon = 1e-8);
    }

    #[test]
    fn power_iteration_agrees_with_svd() {
        let a = DMatrix::from_fn(10, 10, |i, j| ((i * 7 + j * 3) % 11) as f64 / 11.0 - 0.4);
        let svd = a.singular_values().iter().cloned().fold(0.0, f64::max);
        let pi = power_iteration_norm(&a, 500, 1e-15);
        assert!((svd - pi).abs() < 1e-8 * svd);
    }
}
